//! Weighted samples and volume comparison: ball volumes, radial area
//! profiles, Bishop-Gromov monotonicity checks, growth ratios, and the
//! polar integration identity on the exact models.

use crate::generators::{unit_ball_volume_raw, AnalyticSpace, GeneratorError, SpaceKind};
use crate::metric_core::{FiniteMetricSpace, SpaceError};
use crate::quadrature::adaptive_simpson;
use crate::report::{VerificationReport, Verdict};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("weight count {got} does not match point count {expected}")]
    WeightCount { got: usize, expected: usize },
    #[error("weight {w} at index {index} is not positive and finite")]
    BadWeight { index: usize, w: f64 },
    #[error("radius {r} must be non-negative")]
    NegativeRadius { r: f64 },
    #[error("radius {r} must be positive")]
    NonPositiveRadius { r: f64 },
    #[error("radii must be strictly increasing and positive, got ({r1}, {r2})")]
    RadiusOrder { r1: f64, r2: f64 },
    #[error("need at least 4 bins, got {got}")]
    BinCount { got: usize },
    #[error("all sample points coincide with the center; no profile")]
    DegenerateProfile,
    #[error("no closed-form ball volume at the distinguished point of this space")]
    NoAnalyticBall,
    #[error("radius grid must be non-empty, positive, strictly increasing")]
    BadRadiusGrid,
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// A finite metric space together with per-point weights that sum to
/// the measure it discretizes, and the generator that produced it when
/// one did.
pub struct MeasuredSpace {
    base: FiniteMetricSpace,
    weights: Vec<f64>,
    generator: Option<AnalyticSpace>,
}

impl MeasuredSpace {
    pub fn new(
        base: FiniteMetricSpace,
        weights: Vec<f64>,
        generator: Option<AnalyticSpace>,
    ) -> Result<Self, MeasureError> {
        if weights.len() != base.point_count() {
            return Err(MeasureError::WeightCount {
                got: weights.len(),
                expected: base.point_count(),
            });
        }
        if let Some((index, &w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(**w > 0.0) || !w.is_finite())
        {
            return Err(MeasureError::BadWeight { index, w });
        }
        Ok(MeasuredSpace {
            base,
            weights,
            generator,
        })
    }

    pub fn base(&self) -> &FiniteMetricSpace {
        &self.base
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn generator(&self) -> Option<&AnalyticSpace> {
        self.generator.as_ref()
    }

    /// Comparison dimension used by the volume checks.
    pub fn n(&self) -> usize {
        self.base.dimension_hint()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Index of the sample point nearest to the distinguished point of
    /// the generator (the apex, center, vertex...), when there is one.
    pub fn distinguished_index(&self) -> Option<usize> {
        let space = self.generator.as_ref()?;
        let origin = space.distinguished_point();
        // graph backings (paraboloid) store embedding coordinates, so
        // the chordal distance ranks candidates correctly there too
        let dist = |p: &[f64]| -> f64 {
            if self.base.is_graph() {
                p.iter()
                    .zip(&origin)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            } else {
                space.distance_unchecked(p, &origin)
            }
        };
        (0..self.base.point_count())
            .min_by(|&i, &j| dist(self.base.coords(i)).total_cmp(&dist(self.base.coords(j))))
    }
}

fn check_index(ms: &MeasuredSpace, p: usize) -> Result<(), MeasureError> {
    if p >= ms.base.point_count() {
        return Err(MeasureError::Space(SpaceError::IndexOutOfRange {
            index: p,
            count: ms.base.point_count(),
        }));
    }
    Ok(())
}

/// Total weight of the closed ball `B(p, r)`, the point `p` included.
pub fn ball_volume(ms: &MeasuredSpace, p: usize, r: f64) -> Result<f64, MeasureError> {
    check_index(ms, p)?;
    if !(r >= 0.0) {
        return Err(MeasureError::NegativeRadius { r });
    }
    let mut sum = 0.0;
    for i in 0..ms.base.point_count() {
        if ms.base.distance(p, i) <= r {
            sum += ms.weights[i];
        }
    }
    Ok(sum)
}

/// Equal-width annular decomposition of the trusted region around a
/// center: bin `k` covers distances in `(edges[k], edges[k+1]]`, except
/// the first, which is closed at 0. `a_estimate[k]` is the bin mass
/// divided by the bin width, a one-dimensional density whose exact
/// counterpart is the boundary area `a(r)` at the bin midpoint.
#[derive(Clone, Debug)]
pub struct RadialProfile {
    pub center: usize,
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub mass: Vec<f64>,
    pub a_estimate: Vec<f64>,
    /// Set when the average bin population is below 10 points; the
    /// profile is then too noisy to trust.
    pub low_population: bool,
}

impl RadialProfile {
    pub fn bin_count(&self) -> usize {
        self.counts.len()
    }

    pub fn midpoint(&self, k: usize) -> f64 {
        0.5 * (self.edges[k] + self.edges[k + 1])
    }

    pub fn width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }
}

/// Bin the sample radially around `p` out to 0.8 of the largest
/// observed distance (the trusted region; beyond it truncation bias
/// dominates).
pub fn radial_profile(
    ms: &MeasuredSpace,
    p: usize,
    bin_count: usize,
) -> Result<RadialProfile, MeasureError> {
    check_index(ms, p)?;
    if bin_count < 4 {
        return Err(MeasureError::BinCount { got: bin_count });
    }
    let count = ms.base.point_count();
    let dists: Vec<f64> = (0..count).map(|i| ms.base.distance(p, i)).collect();
    let max_dist = dists.iter().cloned().fold(0.0f64, f64::max);
    if !(max_dist > 0.0) {
        return Err(MeasureError::DegenerateProfile);
    }
    let outer = 0.8 * max_dist;
    let width = outer / bin_count as f64;
    let mut edges: Vec<f64> = (0..=bin_count).map(|k| k as f64 * width).collect();
    edges[bin_count] = outer;
    let mut counts = vec![0u64; bin_count];
    let mut mass = vec![0.0f64; bin_count];
    let mut inside = 0u64;
    for (i, &d) in dists.iter().enumerate() {
        if d > outer {
            continue;
        }
        inside += 1;
        let k = if d <= 0.0 {
            0
        } else {
            ((d / width).ceil() as usize).saturating_sub(1).min(bin_count - 1)
        };
        counts[k] += 1;
        mass[k] += ms.weights[i];
    }
    let a_estimate = mass.iter().map(|m| m / width).collect();
    Ok(RadialProfile {
        center: p,
        edges,
        counts,
        mass,
        a_estimate,
        low_population: (inside as f64) < 10.0 * bin_count as f64,
    })
}

/// Infinitesimal Bishop-Gromov check at curvature 0: the normalized
/// boundary density `a(r) / r^{n-1}` must not increase from one
/// non-empty bin to the next by more than the tolerance. Empty
/// profiles pass vacuously.
pub fn bg_profile_check(profile: &RadialProfile, n: usize, tol: f64) -> VerificationReport {
    let mut rep = VerificationReport::new("bg-profile", tol);
    rep.echo("center", profile.center);
    rep.echo("bins", profile.bin_count());
    rep.echo("n", n);
    if profile.low_population {
        rep.echo("low_population", true);
    }
    let nm1 = (n as i32) - 1;
    let mut prev: Option<(usize, f64)> = None;
    for k in 0..profile.bin_count() {
        if profile.counts[k] == 0 {
            continue;
        }
        let f = profile.a_estimate[k] / profile.midpoint(k).powi(nm1);
        if let Some((kp, fp)) = prev {
            rep.items_tested += 1;
            // relative slack: pass while f_next <= f_prev (1 + tol)
            let margin = 1.0 + tol - f / fp;
            rep.observe_margin(margin);
            if margin < 0.0 {
                rep.push_violation(
                    format!("bins {kp}->{k}"),
                    margin,
                    format!(
                        "normalized density rose from {fp:.6e} to {f:.6e} \
                         (ratio {:.6})",
                        f / fp
                    ),
                );
            }
        }
        prev = Some((k, f));
    }
    rep.finish();
    if rep.items_tested == 0 {
        rep.verdict = Verdict::Inconclusive;
    }
    rep
}

/// Integrated Bishop-Gromov ball comparison at curvature 0:
/// `vol B(p, r1) / vol B(p, r2) >= (r1/r2)^n - tol` for `r1 < r2`.
pub fn ball_ratio_check(
    ms: &MeasuredSpace,
    p: usize,
    r1: f64,
    r2: f64,
    n: usize,
    tol: f64,
) -> Result<VerificationReport, MeasureError> {
    if !(r1 > 0.0 && r2 > r1) {
        return Err(MeasureError::RadiusOrder { r1, r2 });
    }
    let v1 = ball_volume(ms, p, r1)?;
    let v2 = ball_volume(ms, p, r2)?;
    let mut rep = VerificationReport::new("bg-ball-ratio", tol);
    rep.echo("center", p);
    rep.echo("r1", r1);
    rep.echo("r2", r2);
    rep.echo("n", n);
    rep.items_tested = 1;
    let ratio = v1 / v2;
    let floor = (r1 / r2).powi(n as i32) - tol;
    let margin = ratio - floor;
    rep.observe_margin(margin);
    if margin < 0.0 {
        rep.push_violation(
            format!("B({p}, {r1}) vs B({p}, {r2})"),
            margin,
            format!(
                "volume ratio {ratio:.6} fell below the Euclidean floor {:.6}",
                floor + tol
            ),
        );
    }
    rep.finish();
    Ok(rep)
}

/// Volume growth ratio `vol B(p, r) / (omega_n r^n)`.
pub fn volume_growth_ratio(ms: &MeasuredSpace, p: usize, r: f64) -> Result<f64, MeasureError> {
    if !(r > 0.0) {
        return Err(MeasureError::NonPositiveRadius { r });
    }
    let n = ms.n();
    Ok(ball_volume(ms, p, r)? / (unit_ball_volume(n) * r.powi(n as i32)))
}

/// The growth-constant estimate: the minimum of the growth ratio over
/// a radius grid. By Bishop-Gromov the true ratio is non-increasing, so
/// on clean data this is just the value at the largest radius; taking
/// the minimum keeps the estimate one-sided under sampling noise.
pub fn volume_growth_min(
    ms: &MeasuredSpace,
    p: usize,
    radii: &[f64],
) -> Result<f64, MeasureError> {
    if radii.is_empty() || radii.windows(2).any(|w| w[1] <= w[0]) || !(radii[0] > 0.0) {
        return Err(MeasureError::BadRadiusGrid);
    }
    let mut best = f64::INFINITY;
    for &r in radii {
        best = best.min(volume_growth_ratio(ms, p, r)?);
    }
    Ok(best)
}

/// Volume of the unit ball in R^n.
pub fn unit_ball_volume(n: usize) -> f64 {
    unit_ball_volume_raw(n)
}

/// Outcome of the polar integration identity check.
#[derive(Clone, Copy, Debug)]
pub struct IntegrationLemma {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    pub tolerance: f64,
}

/// Check the polar volume identity at the distinguished point: the
/// exact ball volume (lhs) never exceeds the link integral of
/// `r^{n-1}` out to `min(R, cut)` (rhs). Equality holds exactly on the
/// cone, the Euclidean ball, and the cylinder (whose direction-dependent
/// cut the quadrature splits at its kinks); the paraboloid is strictly
/// below; radial expansion past the cut would be needed to break it.
pub fn integration_lemma_check(
    space: &AnalyticSpace,
    big_r: f64,
) -> Result<IntegrationLemma, MeasureError> {
    if !(big_r > 0.0) {
        return Err(MeasureError::NonPositiveRadius { r: big_r });
    }
    let lhs = space
        .ball_volume_exact(&space.distinguished_point(), big_r)
        .ok_or(MeasureError::NoAnalyticBall)?;
    let rhs = match space.kind() {
        SpaceKind::FlatCylinder { rho, half_height } => {
            let (w, h) = (PI * rho, *half_height);
            // integrate 0.5 min(R, w/cos, h/sin)^2 over one quadrant of
            // the link, splitting at the kinks of the active constraint
            let g = |psi: f64| {
                let mut m = big_r;
                let c = psi.cos();
                if c > 0.0 {
                    m = m.min(w / c);
                }
                let s = psi.sin();
                if s > 0.0 {
                    m = m.min(h / s);
                }
                0.5 * m * m
            };
            let mut splits = vec![0.0, 0.5 * PI];
            if w < big_r {
                splits.push((w / big_r).acos());
            }
            if h < big_r {
                splits.push((h / big_r).asin());
            }
            splits.push(h.atan2(w));
            splits.sort_by(f64::total_cmp);
            splits.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
            let mut quadrant = 0.0;
            for piece in splits.windows(2) {
                let eps = 1e-13 * (0.5 * big_r * big_r) * (piece[1] - piece[0]).max(1e-3);
                quadrant += adaptive_simpson(&g, piece[0], piece[1], eps);
            }
            4.0 * quadrant
        }
        _ => {
            // cut is infinite in every direction; the link integral
            // collapses to link measure times the radial quadrature
            let n = space.dimension() as i32;
            let eps = 1e-13 * big_r.powi(n).max(1e-3);
            space.link_measure() * adaptive_simpson(&|r| r.powi(n - 1), 0.0, big_r, eps)
        }
    };
    let tolerance = 1e-9 * rhs.abs().max(1.0);
    Ok(IntegrationLemma {
        lhs,
        rhs,
        pass: lhs <= rhs + tolerance,
        tolerance,
    })
}

/// Expand `x` radially from `p` by `1/t` in a model space; see
/// [`AnalyticSpace::radial_expansion`]. Absence (`Ok(None)`) is the
/// expected answer past a cut point or the truncation boundary.
pub fn radial_expansion(
    space: &AnalyticSpace,
    p: &[f64],
    t: f64,
    x: &[f64],
) -> Result<Option<Vec<f64>>, GeneratorError> {
    space.radial_expansion(p, t, x)
}
