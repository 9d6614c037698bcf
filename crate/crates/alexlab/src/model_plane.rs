//! Trigonometry in the constant-curvature comparison plane.
//!
//! The plane of curvature `kappa` is the Euclidean plane (`kappa = 0`),
//! the round sphere of radius `1/sqrt(kappa)` (`kappa > 0`), or the
//! hyperbolic plane rescaled to curvature `kappa` (`kappa < 0`). All
//! comparison-space reasoning elsewhere in the crate funnels through the
//! two primitives here: the Jacobi function and the side-side-side
//! comparison angle.

use std::f64::consts::PI;
use thiserror::Error;

/// Below `|kappa| * length^2 = 1e-8` the curved formulas lose more
/// precision to cancellation than the flat ones lose to truncation, so
/// both `jacobi_s` and `comparison_angle` switch to their flat branch
/// there. The crossover keeps the branch error under ~2e-9 radians.
const FLAT_THRESHOLD: f64 = 1e-8;

/// Slack for `acos` arguments: cosines up to this far outside [-1, 1]
/// are treated as degenerate (collinear) configurations and clamped.
const COS_CLAMP: f64 = 1e-12;

/// Above `sqrt(|kappa|) * length = 350` the hyperbolic law of cosines is
/// evaluated in exponentially rescaled form to dodge `cosh` overflow.
const COSH_RESCALE: f64 = 350.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlaneError {
    #[error("length {r} exceeds pi/sqrt(kappa) = {max} in the kappa = {kappa} plane")]
    SideTooLong { kappa: f64, r: f64, max: f64 },
    #[error("negative length {r}")]
    NegativeLength { r: f64 },
    #[error("triangle sides ({a}, {b}, {c}) are not all positive")]
    NonPositiveSide { a: f64, b: f64, c: f64 },
    #[error("sides ({a}, {b}, {c}) violate the triangle inequality")]
    TriangleInequality { a: f64, b: f64, c: f64 },
    #[error("perimeter {perimeter} does not fit on the kappa = {kappa} sphere (limit {limit})")]
    PerimeterTooLong {
        kappa: f64,
        perimeter: f64,
        limit: f64,
    },
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
}

/// The comparison plane of constant curvature `kappa`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelPlane {
    pub kappa: f64,
}

impl ModelPlane {
    pub fn new(kappa: f64) -> Self {
        ModelPlane { kappa }
    }

    /// Diameter of the model plane: `pi/sqrt(kappa)` on the sphere,
    /// infinite otherwise.
    pub fn diameter(&self) -> f64 {
        if self.kappa > 0.0 {
            PI / self.kappa.sqrt()
        } else {
            f64::INFINITY
        }
    }

    pub fn jacobi_s(&self, r: f64) -> Result<f64, PlaneError> {
        jacobi_s(self.kappa, r)
    }

    pub fn comparison_angle(&self, a: f64, b: f64, c: f64) -> Result<f64, PlaneError> {
        comparison_angle(self.kappa, a, b, c)
    }
}

/// The Jacobi function of the curvature-`kappa` plane: the solution of
/// `s'' + kappa s = 0` with `s(0) = 0`, `s'(0) = 1`. Concretely
/// `sin(sqrt(kappa) r)/sqrt(kappa)`, `r`, or `sinh(sqrt(-kappa) r)/sqrt(-kappa)`
/// depending on the sign of `kappa`. This is the radius of the geodesic
/// circle of circumference `2 pi jacobi_s(kappa, r)` and drives every
/// volume comparison downstream.
///
/// Errors if `r < 0`, or if `kappa > 0` and `r` exceeds the diameter
/// `pi/sqrt(kappa)`.
pub fn jacobi_s(kappa: f64, r: f64) -> Result<f64, PlaneError> {
    if r < 0.0 {
        return Err(PlaneError::NegativeLength { r });
    }
    if kappa > 0.0 {
        let max = PI / kappa.sqrt();
        if r > max {
            return Err(PlaneError::SideTooLong { kappa, r, max });
        }
    }
    if kappa.abs() * r * r < FLAT_THRESHOLD {
        // two-term series; the truncation error kappa^2 r^5 / 120 is
        // below 1e-16 relative throughout this branch
        return Ok(r * (1.0 - kappa * r * r / 6.0));
    }
    Ok(if kappa > 0.0 {
        let s = kappa.sqrt();
        (s * r).sin() / s
    } else {
        let s = (-kappa).sqrt();
        (s * r).sinh() / s
    })
}

/// Derivative `s'` of the Jacobi function: `cos`, `1`, or `cosh` of the
/// rescaled radius. Shares the domain rules of [`jacobi_s`].
pub fn jacobi_s_prime(kappa: f64, r: f64) -> Result<f64, PlaneError> {
    if r < 0.0 {
        return Err(PlaneError::NegativeLength { r });
    }
    if kappa > 0.0 {
        let max = PI / kappa.sqrt();
        if r > max {
            return Err(PlaneError::SideTooLong { kappa, r, max });
        }
        Ok((kappa.sqrt() * r).cos())
    } else if kappa == 0.0 {
        Ok(1.0)
    } else {
        Ok(((-kappa).sqrt() * r).cosh())
    }
}

/// The comparison angle: in the curvature-`kappa` plane, the angle at
/// the vertex joining sides `a` and `b` of the triangle whose opposite
/// side is `c`. For a metric-space triple this is the model angle of
/// the triangle with the same three pairwise distances.
///
/// Errors on non-positive sides, triangle-inequality violations, and
/// (for `kappa > 0`) sides or perimeters that do not fit on the sphere.
/// Collinear triples within floating-point slack invert cleanly to `0`
/// or `pi`.
pub fn comparison_angle(kappa: f64, a: f64, b: f64, c: f64) -> Result<f64, PlaneError> {
    if !(a > 0.0 && b > 0.0 && c > 0.0) {
        return Err(PlaneError::NonPositiveSide { a, b, c });
    }
    let scale = a.max(b).max(c);
    let slack = 16.0 * f64::EPSILON * scale;
    if c > a + b + slack || a > b + c + slack || b > a + c + slack {
        return Err(PlaneError::TriangleInequality { a, b, c });
    }
    if kappa > 0.0 {
        let max = PI / kappa.sqrt();
        for r in [a, b, c] {
            if r >= max {
                return Err(PlaneError::SideTooLong { kappa, r, max });
            }
        }
        let perimeter = a + b + c;
        let limit = 2.0 * max;
        if perimeter >= limit {
            return Err(PlaneError::PerimeterTooLong {
                kappa,
                perimeter,
                limit,
            });
        }
    }

    let cos_angle = if kappa.abs() * scale * scale < FLAT_THRESHOLD {
        (a * a + b * b - c * c) / (2.0 * a * b)
    } else if kappa > 0.0 {
        let s = kappa.sqrt();
        ((s * c).cos() - (s * a).cos() * (s * b).cos()) / ((s * a).sin() * (s * b).sin())
    } else {
        let s = (-kappa).sqrt();
        if s * scale > COSH_RESCALE {
            // factor e^{s(a+b)} out of numerator and denominator; the
            // exponents below are all <= 0, so nothing overflows
            let (x, y, z) = (s * a, s * b, s * c);
            let ex = (-2.0 * x).exp();
            let ey = (-2.0 * y).exp();
            let em = (z - x - y).exp();
            ((1.0 + ex) * (1.0 + ey) - 2.0 * em) / ((1.0 - ex) * (1.0 - ey))
        } else {
            ((s * a).cosh() * (s * b).cosh() - (s * c).cosh()) / ((s * a).sinh() * (s * b).sinh())
        }
    };

    if !((-1.0 - COS_CLAMP..=1.0 + COS_CLAMP).contains(&cos_angle)) {
        // a curved-plane size violation that slipped the explicit checks
        return Err(PlaneError::TriangleInequality { a, b, c });
    }
    Ok(cos_angle.clamp(-1.0, 1.0).acos())
}

/// Closed-form infimum, over pairs at mutual distance >= 2R, of the
/// excess forced by the hyperbolic law of cosines when every comparison
/// angle at a third point is obtuse: `(1/kappa) ln(2 / (1 - e^{-2 kappa R}))`.
/// Strictly decreasing in `R` with limit `ln(2)/kappa`.
///
/// `kappa` here is the parameter of the *lower* curvature bound `-kappa^2`
/// normalization used by the finiteness theorem, so it must be positive,
/// as must `big_r`.
pub fn hyperbolic_excess_lower_bound(kappa: f64, big_r: f64) -> Result<f64, PlaneError> {
    if !(kappa > 0.0) {
        return Err(PlaneError::NonPositive {
            name: "kappa",
            value: kappa,
        });
    }
    if !(big_r > 0.0) {
        return Err(PlaneError::NonPositive {
            name: "R",
            value: big_r,
        });
    }
    Ok((2.0 / (1.0 - (-2.0 * kappa * big_r).exp())).ln() / kappa)
}
