//! Adaptive Simpson quadrature.
//!
//! This is the independent oracle the test suite holds closed forms
//! against, so it deliberately depends on nothing else in the crate.
//! Intervals are bisected until the classical Richardson estimate
//! `|S(left) + S(right) - S(whole)| <= 15 eps` holds, and the accepted
//! value keeps the extrapolation term, giving O(h^6) local behavior.

const MAX_DEPTH: u32 = 48;

/// Absolute floor for error budgets; below this, rounding noise in the
/// integrand dominates and further subdivision is wasted work.
pub const ABS_FLOOR: f64 = 1e-13;

fn simpson(fa: f64, fm: f64, fb: f64, width: f64) -> f64 {
    (fa + 4.0 * fm + fb) * (width / 6.0)
}

fn adapt(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    let half = 0.5 * eps;
    adapt(f, a, m, fa, flm, fm, left, half, depth - 1)
        + adapt(f, m, b, fm, frm, fb, right, half, depth - 1)
}

/// Integrate `f` over `[a, b]` with an absolute error budget `eps`.
///
/// `a <= b` is expected; a reversed or empty interval returns 0.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let eps = eps.max(ABS_FLOOR);
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(fa, fm, fb, b - a);
    adapt(f, a, b, fa, fm, fb, whole, eps, MAX_DEPTH)
}

/// Integrate with a mixed budget: absolute `abs_tol`, or `rel_tol`
/// relative to a coarse first-pass magnitude, whichever is larger.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    // five-point rough pass to set the relative scale
    let h = (b - a) / 4.0;
    let rough: f64 = (0..4)
        .map(|i| {
            let x0 = a + i as f64 * h;
            simpson(f(x0), f(x0 + 0.5 * h), f(x0 + h), h)
        })
        .sum();
    let eps = abs_tol.max(rel_tol * rough.abs());
    adaptive_simpson(f, a, b, eps)
}

/// Integrate with the crate-default budget (1e-12 absolute, 1e-11
/// relative), adequate for every oracle comparison in the test suite.
pub fn integrate_auto(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    integrate(f, a, b, 1e-12, 1e-11)
}
