//! Exact model spaces and seeded sampling of finite subsets.
//!
//! Five reference geometries, four with closed-form metrics and one
//! (the paraboloid) metrized by a k-nearest-neighbor graph surrogate:
//!
//! * `EuclideanBall { n, radius }` — the closed ball in R^n, chart
//!   coordinates Cartesian.
//! * `ConeOverCircle { rho, radius }` — the Euclidean cone over a
//!   circle of length `2 pi rho`, `rho` in (0, 1]; chart `(r, theta)`
//!   with `theta` in `[0, 2 pi rho)`. Curvature 0 away from the apex,
//!   nonnegative globally.
//! * `FlatCylinder { rho, half_height }` — radius-`rho` cylinder,
//!   chart `(theta, z)` with `theta` in `[0, 2 pi)`, `|z| <= half_height`.
//! * `HyperbolicDisk { kappa, radius }` — curvature `kappa < 0`, polar
//!   chart `(r, theta)`, geodesic radius `r <= radius`.
//! * `ParaboloidPatch { a, radius }` — the surface `z = a (x^2 + y^2)`
//!   over the planar disk of radius `radius`, chart `(x, y, z)`.

use crate::measure::{MeasuredSpace, MeasureError};
use crate::metric_core::{FiniteMetricSpace, SpaceError};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Neighbors per point in the paraboloid's graph surrogate.
const KNN_NEIGHBORS: usize = 12;

/// Relative slack accepted when validating chart coordinates against
/// domain boundaries.
const DOMAIN_SLACK: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("{name} must satisfy {requirement}, got {value}")]
    ParamOutOfRange {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("dimension must be at least 2, got {n}")]
    DimensionTooSmall { n: usize },
    #[error("sample count must be at least 16, got {count}")]
    SampleTooSmall { count: usize },
    #[error("point {point:?} outside the space domain: {reason}")]
    PointOutsideDomain { point: Vec<f64>, reason: String },
    #[error("point has {got} coordinates, chart expects {expected}")]
    ChartDimension { got: usize, expected: usize },
    #[error("the paraboloid has no closed-form metric; its samples are graph-backed")]
    NoExactMetric,
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// Parameter block identifying one of the five model geometries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum SpaceKind {
    EuclideanBall { n: usize, radius: f64 },
    ConeOverCircle { rho: f64, radius: f64 },
    FlatCylinder { rho: f64, half_height: f64 },
    HyperbolicDisk { kappa: f64, radius: f64 },
    ParaboloidPatch { a: f64, radius: f64 },
}

/// A validated model space. Construct with [`make_space`]; every
/// method may then assume the parameters are in range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AnalyticSpace {
    kind: SpaceKind,
}

/// Validate parameters and wrap the space. Rejects cone openings
/// `rho > 1` (those would be curvature-negative at the apex),
/// non-negative hyperbolic curvature, and non-positive sizes.
pub fn make_space(kind: SpaceKind) -> Result<AnalyticSpace, GeneratorError> {
    match &kind {
        SpaceKind::EuclideanBall { n, radius } => {
            if *n < 2 {
                return Err(GeneratorError::DimensionTooSmall { n: *n });
            }
            positive("radius", *radius)?;
        }
        SpaceKind::ConeOverCircle { rho, radius } => {
            if !(*rho > 0.0 && *rho <= 1.0) {
                return Err(GeneratorError::ParamOutOfRange {
                    name: "rho",
                    requirement: "0 < rho <= 1",
                    value: *rho,
                });
            }
            positive("radius", *radius)?;
        }
        SpaceKind::FlatCylinder { rho, half_height } => {
            positive("rho", *rho)?;
            positive("half_height", *half_height)?;
        }
        SpaceKind::HyperbolicDisk { kappa, radius } => {
            if !(*kappa < 0.0) {
                return Err(GeneratorError::ParamOutOfRange {
                    name: "kappa",
                    requirement: "kappa < 0",
                    value: *kappa,
                });
            }
            positive("radius", *radius)?;
        }
        SpaceKind::ParaboloidPatch { a, radius } => {
            positive("a", *a)?;
            positive("radius", *radius)?;
        }
    }
    Ok(AnalyticSpace { kind })
}

fn positive(name: &'static str, value: f64) -> Result<(), GeneratorError> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(GeneratorError::ParamOutOfRange {
            name,
            requirement: "positive and finite",
            value,
        });
    }
    Ok(())
}

/// Circular distance between angles in `[0, period)`.
fn circ_dist(a: f64, b: f64, period: f64) -> f64 {
    let raw = (a - b).abs();
    raw.min(period - raw)
}

/// Signed angular difference wrapped into `(-period/2, period/2]`.
fn wrap_signed(x: f64, period: f64) -> f64 {
    let mut d = x.rem_euclid(period);
    if d > 0.5 * period {
        d -= period;
    }
    d
}

impl AnalyticSpace {
    pub fn kind(&self) -> &SpaceKind {
        &self.kind
    }

    /// Hausdorff dimension of the space (and of the comparison used in
    /// volume checks).
    pub fn dimension(&self) -> usize {
        match &self.kind {
            SpaceKind::EuclideanBall { n, .. } => *n,
            _ => 2,
        }
    }

    /// Number of chart coordinates per point.
    pub fn chart_dimension(&self) -> usize {
        match &self.kind {
            SpaceKind::EuclideanBall { n, .. } => *n,
            SpaceKind::ParaboloidPatch { .. } => 3,
            _ => 2,
        }
    }

    /// Measure of the unit link at the distinguished point: the length
    /// of the space of directions, `(n-1)`-volume in general.
    pub fn link_measure(&self) -> f64 {
        match &self.kind {
            SpaceKind::EuclideanBall { n, .. } => *n as f64 * unit_ball_volume_raw(*n),
            SpaceKind::ConeOverCircle { rho, .. } => 2.0 * PI * rho,
            SpaceKind::FlatCylinder { .. }
            | SpaceKind::HyperbolicDisk { .. }
            | SpaceKind::ParaboloidPatch { .. } => 2.0 * PI,
        }
    }

    /// Total n-dimensional volume of the (truncated) space.
    pub fn total_area(&self) -> f64 {
        match &self.kind {
            SpaceKind::EuclideanBall { n, radius } => {
                unit_ball_volume_raw(*n) * radius.powi(*n as i32)
            }
            SpaceKind::ConeOverCircle { rho, radius } => PI * rho * radius * radius,
            SpaceKind::FlatCylinder { rho, half_height } => 4.0 * PI * rho * half_height,
            SpaceKind::HyperbolicDisk { kappa, radius } => {
                let lam = 1.0 / (-kappa).sqrt();
                2.0 * PI * lam * lam * ((radius / lam).cosh() - 1.0)
            }
            SpaceKind::ParaboloidPatch { a, radius } => {
                PI * ((1.0 + 4.0 * a * a * radius * radius).powf(1.5) - 1.0) / (6.0 * a * a)
            }
        }
    }

    /// The natural base point: the origin, apex, waist point
    /// `(theta, z) = (0, 0)`, disk center, or paraboloid vertex.
    pub fn distinguished_point(&self) -> Vec<f64> {
        match &self.kind {
            SpaceKind::EuclideanBall { n, .. } => vec![0.0; *n],
            SpaceKind::ParaboloidPatch { .. } => vec![0.0, 0.0, 0.0],
            _ => vec![0.0, 0.0],
        }
    }

    /// Radius of the region the generator actually covers, measured
    /// from the distinguished point. Checks that sample near a
    /// truncation boundary restrict themselves to 0.8 of this.
    pub fn truncation_radius(&self) -> f64 {
        match &self.kind {
            SpaceKind::EuclideanBall { radius, .. }
            | SpaceKind::ConeOverCircle { radius, .. }
            | SpaceKind::HyperbolicDisk { radius, .. } => *radius,
            SpaceKind::FlatCylinder { rho, half_height } => {
                ((PI * rho) * (PI * rho) + half_height * half_height).sqrt()
            }
            SpaceKind::ParaboloidPatch { a, radius } => meridian_length(*a, *radius),
        }
    }

    /// Distance at which the radial geodesic leaving the distinguished
    /// point in link direction `psi` stops minimizing or exits the
    /// space. Infinite everywhere except on the cylinder, where the
    /// antipodal line cuts at `pi rho / |cos psi|` and the height
    /// truncation exits at `half_height / |sin psi|`.
    pub fn cut(&self, psi: f64) -> f64 {
        match &self.kind {
            SpaceKind::FlatCylinder { rho, half_height } => {
                let wrap = PI * rho / psi.cos().abs();
                let exit = half_height / psi.sin().abs();
                wrap.min(exit)
            }
            _ => f64::INFINITY,
        }
    }

    /// Validate chart coordinates against the domain.
    pub fn validate_point(&self, x: &[f64]) -> Result<(), GeneratorError> {
        let expected = self.chart_dimension();
        if x.len() != expected {
            return Err(GeneratorError::ChartDimension {
                got: x.len(),
                expected,
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(self.domain_error(x, "non-finite coordinate"));
        }
        match &self.kind {
            SpaceKind::EuclideanBall { radius, .. } => {
                let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > radius * (1.0 + DOMAIN_SLACK) {
                    return Err(self.domain_error(x, "norm exceeds the ball radius"));
                }
            }
            SpaceKind::ConeOverCircle { rho, radius } => {
                self.check_polar(x, *radius, 2.0 * PI * rho)?;
            }
            SpaceKind::FlatCylinder { rho: _, half_height } => {
                let (theta, z) = (x[0], x[1]);
                if !(0.0..2.0 * PI * (1.0 + DOMAIN_SLACK)).contains(&theta) {
                    return Err(self.domain_error(x, "theta outside [0, 2 pi)"));
                }
                if z.abs() > half_height * (1.0 + DOMAIN_SLACK) {
                    return Err(self.domain_error(x, "|z| exceeds the half height"));
                }
            }
            SpaceKind::HyperbolicDisk { radius, .. } => {
                self.check_polar(x, *radius, 2.0 * PI)?;
            }
            SpaceKind::ParaboloidPatch { a, radius } => {
                let planar = (x[0] * x[0] + x[1] * x[1]).sqrt();
                if planar > radius * (1.0 + DOMAIN_SLACK) {
                    return Err(self.domain_error(x, "planar radius exceeds the patch radius"));
                }
                let z = a * planar * planar;
                if (x[2] - z).abs() > 1e-9 * (1.0 + z.abs()) {
                    return Err(self.domain_error(x, "point does not lie on the surface"));
                }
            }
        }
        Ok(())
    }

    fn check_polar(&self, x: &[f64], radius: f64, period: f64) -> Result<(), GeneratorError> {
        let (r, theta) = (x[0], x[1]);
        if !(0.0..=radius * (1.0 + DOMAIN_SLACK)).contains(&r) {
            return Err(self.domain_error(x, "radial coordinate out of range"));
        }
        if !(0.0..period * (1.0 + DOMAIN_SLACK)).contains(&theta) {
            return Err(self.domain_error(x, "angular coordinate out of range"));
        }
        Ok(())
    }

    fn domain_error(&self, x: &[f64], reason: &str) -> GeneratorError {
        GeneratorError::PointOutsideDomain {
            point: x.to_vec(),
            reason: reason.to_string(),
        }
    }

    /// Closed-form distance, validating both points first. Errors on
    /// the paraboloid, whose metric is only available as a graph
    /// surrogate.
    pub fn exact_distance(&self, x: &[f64], y: &[f64]) -> Result<f64, GeneratorError> {
        if matches!(self.kind, SpaceKind::ParaboloidPatch { .. }) {
            return Err(GeneratorError::NoExactMetric);
        }
        self.validate_point(x)?;
        self.validate_point(y)?;
        Ok(self.distance_unchecked(x, y))
    }

    /// Distance without domain validation. For the paraboloid this is
    /// the chordal (embedding) distance used to weight surrogate-graph
    /// edges, not an intrinsic metric.
    pub(crate) fn distance_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match &self.kind {
            SpaceKind::EuclideanBall { .. } | SpaceKind::ParaboloidPatch { .. } => x
                .iter()
                .zip(y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
            SpaceKind::ConeOverCircle { rho, .. } => {
                let delta = circ_dist(x[1], y[1], 2.0 * PI * rho);
                // cancellation-stable law of cosines around the apex
                let (r1, r2) = (x[0], y[0]);
                let s = (0.5 * delta).sin();
                ((r1 - r2) * (r1 - r2) + 4.0 * r1 * r2 * s * s).sqrt()
            }
            SpaceKind::FlatCylinder { rho, .. } => {
                let dth = circ_dist(x[0], y[0], 2.0 * PI);
                (rho * dth).hypot(x[1] - y[1])
            }
            SpaceKind::HyperbolicDisk { kappa, .. } => {
                let lam = 1.0 / (-kappa).sqrt();
                let (r1, r2) = (x[0] / lam, y[0] / lam);
                let dth = circ_dist(x[1], y[1], 2.0 * PI);
                let s = (0.5 * dth).sin();
                let arg = (r1 - r2).cosh() + 2.0 * r1.sinh() * r2.sinh() * s * s;
                lam * arg.max(1.0).acosh()
            }
        }
    }

    /// `segments + 1` chart points along the minimizing geodesic from
    /// `x` to `y`, endpoints included, equally spaced in arclength.
    /// Points are on the true curve, not chords. Assumes validated,
    /// distinct points; unreachable for the paraboloid (graph-backed).
    pub(crate) fn geodesic_points(&self, x: &[f64], y: &[f64], segments: usize) -> Vec<Vec<f64>> {
        let m = segments.max(1);
        match &self.kind {
            SpaceKind::EuclideanBall { .. } => (0..=m)
                .map(|k| {
                    let t = k as f64 / m as f64;
                    x.iter().zip(y).map(|(a, b)| a + t * (b - a)).collect()
                })
                .collect(),
            SpaceKind::ConeOverCircle { rho, .. } => {
                let circ = 2.0 * PI * rho;
                let (r1, t1, r2, t2) = (x[0], x[1], y[0], y[1]);
                let dth = wrap_signed(t2 - t1, circ);
                // unroll the sector onto the plane, x-axis through the
                // first endpoint; segments through the apex fall out of
                // atan2 at the origin
                let (bx, by) = (r2 * dth.cos(), r2 * dth.sin());
                (0..=m)
                    .map(|k| {
                        let t = k as f64 / m as f64;
                        let px = r1 + t * (bx - r1);
                        let py = t * by;
                        let r = px.hypot(py);
                        let phi = if r > 0.0 { py.atan2(px) } else { 0.0 };
                        vec![r, (t1 + phi).rem_euclid(circ)]
                    })
                    .collect()
            }
            SpaceKind::FlatCylinder { .. } => {
                let dth = wrap_signed(y[0] - x[0], 2.0 * PI);
                let dz = y[1] - x[1];
                (0..=m)
                    .map(|k| {
                        let t = k as f64 / m as f64;
                        vec![(x[0] + t * dth).rem_euclid(2.0 * PI), x[1] + t * dz]
                    })
                    .collect()
            }
            SpaceKind::HyperbolicDisk { kappa, .. } => {
                let lam = 1.0 / (-kappa).sqrt();
                let alpha = self.distance_unchecked(x, y) / lam;
                if alpha < 1e-12 {
                    return vec![x.to_vec(), y.to_vec()];
                }
                let embed = |p: &[f64]| {
                    let q = p[0] / lam;
                    [q.cosh(), q.sinh() * p[1].cos(), q.sinh() * p[1].sin()]
                };
                let (ex, ey) = (embed(x), embed(y));
                let sa = alpha.sinh();
                (0..=m)
                    .map(|k| {
                        let t = k as f64 / m as f64;
                        let (ca, cb) = (((1.0 - t) * alpha).sinh() / sa, (t * alpha).sinh() / sa);
                        let g = [
                            ca * ex[0] + cb * ey[0],
                            ca * ex[1] + cb * ey[1],
                            ca * ex[2] + cb * ey[2],
                        ];
                        let r = lam * g[0].max(1.0).acosh();
                        let theta = if g[1] == 0.0 && g[2] == 0.0 {
                            0.0
                        } else {
                            g[2].atan2(g[1]).rem_euclid(2.0 * PI)
                        };
                        vec![r, theta]
                    })
                    .collect()
            }
            SpaceKind::ParaboloidPatch { .. } => {
                unreachable!("paraboloid samples are graph-backed")
            }
        }
    }

    /// Closed-form volume of the metric ball `B(center, r)` inside the
    /// space, where one is known:
    ///
    /// * any center on the cylinder (disk-in-strip geometry, height
    ///   truncation included);
    /// * the distinguished point of every other kind;
    /// * off-center Euclidean and hyperbolic balls that fit entirely
    ///   inside the truncation (homogeneous, so the centered formula
    ///   applies).
    ///
    /// `None` where no closed form is implemented.
    pub fn ball_volume_exact(&self, center: &[f64], r: f64) -> Option<f64> {
        if self.validate_point(center).is_err() || !(r >= 0.0) {
            return None;
        }
        match &self.kind {
            SpaceKind::EuclideanBall { n, radius } => {
                let c = center.iter().map(|v| v * v).sum::<f64>().sqrt();
                if c <= DOMAIN_SLACK * radius {
                    Some(unit_ball_volume_raw(*n) * r.min(*radius).powi(*n as i32))
                } else if c + r <= *radius {
                    Some(unit_ball_volume_raw(*n) * r.powi(*n as i32))
                } else {
                    None
                }
            }
            SpaceKind::ConeOverCircle { rho, radius } => {
                if center[0] <= DOMAIN_SLACK * radius {
                    Some(PI * rho * r.min(*radius).powi(2))
                } else {
                    None
                }
            }
            SpaceKind::FlatCylinder { rho, half_height } => Some(cylinder_ball_area(
                *rho,
                *half_height,
                center[1],
                r,
            )),
            SpaceKind::HyperbolicDisk { kappa, radius } => {
                let lam = 1.0 / (-kappa).sqrt();
                let area = |t: f64| 2.0 * PI * lam * lam * ((t / lam).cosh() - 1.0);
                if center[0] <= DOMAIN_SLACK * radius {
                    Some(area(r.min(*radius)))
                } else if center[0] + r <= *radius {
                    Some(area(r))
                } else {
                    None
                }
            }
            SpaceKind::ParaboloidPatch { a, radius } => {
                let planar = (center[0] * center[0] + center[1] * center[1]).sqrt();
                if planar > DOMAIN_SLACK * radius {
                    return None;
                }
                let total = meridian_length(*a, *radius);
                let x = invert_meridian_length(*a, *radius, r.min(total));
                Some(PI * ((1.0 + 4.0 * a * a * x * x).powf(1.5) - 1.0) / (6.0 * a * a))
            }
        }
    }

    /// Seeded stratified sample of `count` points with uniform weights
    /// `total_area / count`. Radial strata follow the exact area
    /// measure through inverse CDFs; the angular coordinate is striped
    /// independently, so small balls around the distinguished point
    /// receive very nearly their exact share of points. The paraboloid
    /// sample is metrized by a 12-nearest-neighbor chordal graph; all
    /// other kinds carry their closed-form metric.
    pub fn sample(&self, count: usize, seed: u64) -> Result<MeasuredSpace, GeneratorError> {
        if count < 16 {
            return Err(GeneratorError::SampleTooSmall { count });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut strata: Vec<usize> = (0..count).collect();
        strata.shuffle(&mut rng);

        let mut points: Vec<Vec<f64>> = Vec::with_capacity(count);
        for i in 0..count {
            let u = (strata[i] as f64 + rng.gen::<f64>()) / count as f64;
            let v = (i as f64 + rng.gen::<f64>()) / count as f64;
            points.push(self.place_point(u, v, &mut rng));
        }

        let base = match &self.kind {
            SpaceKind::ParaboloidPatch { .. } => {
                let edges = knn_edges(&points, KNN_NEIGHBORS);
                FiniteMetricSpace::build_from_graph(points, &edges, 2)?
            }
            _ => FiniteMetricSpace::from_exact_points(self, points)?,
        };
        let w = self.total_area() / count as f64;
        Ok(MeasuredSpace::new(base, vec![w; count], Some(self.clone()))?)
    }

    /// Map a radial stratum `u` and angular stratum `v` (both in
    /// [0, 1)) to a chart point via the exact inverse area CDF.
    fn place_point(&self, u: f64, v: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match &self.kind {
            SpaceKind::EuclideanBall { n, radius } => {
                let r = radius * u.powf(1.0 / *n as f64);
                if *n == 2 {
                    let theta = 2.0 * PI * v;
                    vec![r * theta.cos(), r * theta.sin()]
                } else {
                    // isotropic direction from iid normals; the angular
                    // stratum has no analogue in n >= 3
                    let mut dir: Vec<f64> =
                        (0..*n).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
                    let mut norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
                    while norm < 1e-12 {
                        dir = (0..*n).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
                        norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
                    }
                    dir.iter().map(|x| r * x / norm).collect()
                }
            }
            SpaceKind::ConeOverCircle { rho, radius } => {
                vec![radius * u.sqrt(), 2.0 * PI * rho * v]
            }
            SpaceKind::FlatCylinder { half_height, .. } => {
                vec![2.0 * PI * v, (2.0 * u - 1.0) * half_height]
            }
            SpaceKind::HyperbolicDisk { kappa, radius } => {
                let lam = 1.0 / (-kappa).sqrt();
                let r = lam * (1.0 + u * ((radius / lam).cosh() - 1.0)).acosh();
                vec![r, 2.0 * PI * v]
            }
            SpaceKind::ParaboloidPatch { a, radius } => {
                let t_max = (1.0 + 4.0 * a * a * radius * radius).powf(1.5);
                let r = ((1.0 + u * (t_max - 1.0)).powf(2.0 / 3.0) - 1.0).sqrt() / (2.0 * a);
                let theta = 2.0 * PI * v;
                vec![r * theta.cos(), r * theta.sin(), a * r * r]
            }
        }
    }

    /// Expand `x` radially from `p` by the factor `1/t`, `t` in (0, 1]:
    /// the point `y` with `d(p, y) = d(p, x)/t` on a minimizing
    /// geodesic from `p` through `x`. Returns `None` when no such point
    /// exists inside the space (truncation exit, extension past a cut
    /// point) or no chart formula is available (paraboloid). The
    /// candidate is verified against the exact metric before being
    /// returned.
    pub fn radial_expansion(
        &self,
        p: &[f64],
        t: f64,
        x: &[f64],
    ) -> Result<Option<Vec<f64>>, GeneratorError> {
        self.validate_point(p)?;
        self.validate_point(x)?;
        if !(t > 0.0 && t <= 1.0) {
            return Err(GeneratorError::ParamOutOfRange {
                name: "t",
                requirement: "0 < t <= 1",
                value: t,
            });
        }
        if matches!(self.kind, SpaceKind::ParaboloidPatch { .. }) {
            return Ok(None);
        }
        let d_px = self.distance_unchecked(p, x);
        if !(d_px > 0.0) {
            return Err(GeneratorError::PointOutsideDomain {
                point: x.to_vec(),
                reason: "expansion needs x distinct from p".to_string(),
            });
        }
        let candidate = match self.extend_chart(p, x, t) {
            Some(y) => y,
            None => return Ok(None),
        };
        if self.validate_point(&candidate).is_err() {
            return Ok(None);
        }
        // the chart construction can silently leave the minimizing
        // regime (wrap past the cylinder cut, exit the cone sector);
        // certify with the exact metric before answering
        let d_py = self.distance_unchecked(p, &candidate);
        let d_xy = self.distance_unchecked(x, &candidate);
        let scale = d_py.max(1.0);
        let want = d_px / t;
        if (d_py - want).abs() > 1e-9 * scale || (d_px + d_xy - d_py).abs() > 1e-9 * scale {
            return Ok(None);
        }
        Ok(Some(candidate))
    }

    fn extend_chart(&self, p: &[f64], x: &[f64], t: f64) -> Option<Vec<f64>> {
        let inv = 1.0 / t;
        match &self.kind {
            SpaceKind::EuclideanBall { .. } => Some(
                p.iter()
                    .zip(x)
                    .map(|(pc, xc)| pc + (xc - pc) * inv)
                    .collect(),
            ),
            SpaceKind::ConeOverCircle { rho, .. } => {
                let circ = 2.0 * PI * rho;
                if p[0] == 0.0 {
                    return Some(vec![x[0] * inv, x[1]]);
                }
                let dth = wrap_signed(x[1] - p[1], circ);
                let (ax, ay) = (p[0], 0.0);
                let (bx, by) = (x[0] * dth.cos(), x[0] * dth.sin());
                let (yx, yy) = (ax + (bx - ax) * inv, ay + (by - ay) * inv);
                let r = yx.hypot(yy);
                let phi = if r > 0.0 { yy.atan2(yx) } else { 0.0 };
                Some(vec![r, (p[1] + phi).rem_euclid(circ)])
            }
            SpaceKind::FlatCylinder { .. } => {
                let dth = wrap_signed(x[0] - p[0], 2.0 * PI);
                Some(vec![
                    (p[0] + dth * inv).rem_euclid(2.0 * PI),
                    p[1] + (x[1] - p[1]) * inv,
                ])
            }
            SpaceKind::HyperbolicDisk { kappa, .. } => {
                let lam = 1.0 / (-kappa).sqrt();
                let alpha = self.distance_unchecked(p, x) / lam;
                let embed = |q: &[f64]| {
                    let w = q[0] / lam;
                    [w.cosh(), w.sinh() * q[1].cos(), w.sinh() * q[1].sin()]
                };
                let (ep, ex) = (embed(p), embed(x));
                let sa = alpha.sinh();
                if sa == 0.0 {
                    return None;
                }
                let beta = alpha * inv;
                // walk the unit-speed geodesic through p and x out to
                // parameter beta: gamma(s) = p cosh(s) + u sinh(s) with
                // u = (x - p cosh(alpha)) / sinh(alpha)
                let u = [
                    (ex[0] - ep[0] * alpha.cosh()) / sa,
                    (ex[1] - ep[1] * alpha.cosh()) / sa,
                    (ex[2] - ep[2] * alpha.cosh()) / sa,
                ];
                let g = [
                    ep[0] * beta.cosh() + u[0] * beta.sinh(),
                    ep[1] * beta.cosh() + u[1] * beta.sinh(),
                    ep[2] * beta.cosh() + u[2] * beta.sinh(),
                ];
                let r = lam * g[0].max(1.0).acosh();
                let theta = if g[1] == 0.0 && g[2] == 0.0 {
                    0.0
                } else {
                    g[2].atan2(g[1]).rem_euclid(2.0 * PI)
                };
                Some(vec![r, theta])
            }
            SpaceKind::ParaboloidPatch { .. } => None,
        }
    }
}

/// Area of the metric ball of radius `r` around a point at height `z0`
/// on the flat cylinder of radius `rho` truncated to `|z| <= h`.
///
/// On the universal cover the ball is the Euclidean disk; projecting is
/// injective up to the cut lines `x = +/- pi rho`, so the area is the
/// disk clipped to that strip, minus the parts beyond the height
/// truncation.
fn cylinder_ball_area(rho: f64, h: f64, z0: f64, r: f64) -> f64 {
    let w = PI * rho;
    strip_disk_area(r, w) - strip_cap_area(r, w, h - z0) - strip_cap_area(r, w, h + z0)
}

/// Area of `{x^2 + z^2 <= r^2, |x| <= w}`.
fn strip_disk_area(r: f64, w: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    if w >= r {
        return PI * r * r;
    }
    2.0 * w * (r * r - w * w).sqrt() + 2.0 * r * r * (w / r).asin()
}

/// Area of `{x^2 + z^2 <= r^2, |x| <= w, z > a}` for `a >= 0`.
fn strip_cap_area(r: f64, w: f64, a: f64) -> f64 {
    if a >= r {
        return 0.0;
    }
    let x_star = w.min((r * r - a * a).sqrt());
    x_star * (r * r - x_star * x_star).sqrt() + r * r * (x_star / r).asin() - 2.0 * a * x_star
}

/// Arclength of the paraboloid meridian from the vertex to planar
/// radius `r`: the length of `t -> (t, a t^2)`.
fn meridian_length(a: f64, r: f64) -> f64 {
    let q = 2.0 * a * r;
    0.5 * r * (1.0 + q * q).sqrt() + q.asinh() / (4.0 * a)
}

/// Planar radius whose meridian length is `len`, by bisection on
/// `[0, r_max]`. `len` must not exceed `meridian_length(a, r_max)`.
fn invert_meridian_length(a: f64, r_max: f64, len: f64) -> f64 {
    if len <= 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0f64, r_max);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if meridian_length(a, mid) < len {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Undirected union of each point's `k` nearest neighbors by chordal
/// distance, with index tie-breaking for determinism.
fn knn_edges(points: &[Vec<f64>], k: usize) -> Vec<(usize, usize, f64)> {
    let n = points.len();
    let k = k.min(n.saturating_sub(1));
    let dist = |i: usize, j: usize| -> f64 {
        points[i]
            .iter()
            .zip(&points[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    };
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for i in 0..n {
        let mut cands: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (dist(i, j), j))
            .collect();
        cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(w, j) in cands.iter().take(k) {
            let key = (i.min(j), i.max(j));
            if seen.insert(key) {
                edges.push((key.0, key.1, w));
            }
        }
    }
    edges
}

/// Volume of the unit ball in R^n, by the two-step recursion
/// `omega_n = (2 pi / n) omega_{n-2}`.
pub(crate) fn unit_ball_volume_raw(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / n as f64 * unit_ball_volume_raw(n - 2),
    }
}
