use alexlab::excess::{
    ag_bound, chain_bound_check, g_function, phi, ChainConstant, ExcessError, PhiMethod,
};
use alexlab::report::Verdict;

fn phi_cf(n: usize, r: f64, l: f64) -> f64 {
    phi(n, 0.0, r, l, PhiMethod::ClosedForm).unwrap()
}

#[test]
fn phi_frozen_values() {
    // n = 3: ((r^2 - l^2) + 2 l^2 (l/r - 1)) / 6 at (1, 2) is 5/6
    assert!((phi_cf(3, 1.0, 2.0) - 5.0 / 6.0).abs() < 1e-15);
    // n = 2: (l^2/2) ln(l/r) - (l^2 - r^2)/4 at (1, 2) is 2 ln 2 - 3/4
    assert!((phi_cf(2, 1.0, 2.0) - 0.6362943611198906).abs() < 1e-15);
}

#[test]
fn phi_vanishes_exactly_at_the_endpoint() {
    for n in 2..=6 {
        for l in [0.5, 1.0, 3.0, 10.0] {
            assert_eq!(phi_cf(n, l, l), 0.0);
        }
    }
}

#[test]
fn phi_is_monotone() {
    // decreasing in r, increasing in l
    for n in 2..=6 {
        let mut prev = f64::INFINITY;
        for k in 1..=20 {
            let r = 0.1 * k as f64;
            let v = phi_cf(n, r, 2.0);
            assert!(v < prev, "phi must decrease in r");
            assert!(v >= 0.0);
            prev = v;
        }
        let mut prev = -1.0;
        for k in 10..=30 {
            let l = 0.1 * k as f64;
            let v = phi_cf(n, 1.0, l);
            assert!(v > prev, "phi must increase in l");
            prev = v;
        }
    }
}

#[test]
fn phi_quadrature_matches_closed_form() {
    for n in 2..=6 {
        for &(r, l) in &[(0.5, 1.0), (1.0, 2.0), (0.1, 3.0), (2.0, 2.5), (1.0, 1.0)] {
            let cf = phi_cf(n, r, l);
            let q = phi(n, 0.0, r, l, PhiMethod::Quadrature).unwrap();
            assert!(
                (q - cf).abs() <= 1e-6 * cf.max(1e-9),
                "n={n} r={r} l={l}: quadrature {q} vs closed {cf}"
            );
        }
    }
}

#[test]
fn phi_quadrature_satisfies_the_comparison_ode() {
    // central differences: phi'' + (n-1)(s'/s) phi' = 1 at interior
    // points, for negative, zero, and positive curvature
    use alexlab::model_plane::{jacobi_s, jacobi_s_prime};
    // five-point stencils: the step must be large enough that
    // quadrature noise does not swamp the second difference, and the
    // O(h^4) truncation stays tiny; the residual would be order one if
    // the integrand were wrong
    let h = 0.02;
    for &kappa in &[-1.0, 0.0, 0.5] {
        for n in [2usize, 3, 5] {
            let l = 2.0;
            for &r in &[0.5, 1.0, 1.5] {
                let f = |t: f64| phi(n, kappa, t, l, PhiMethod::Quadrature).unwrap();
                let v = [f(r - 2.0 * h), f(r - h), f(r), f(r + h), f(r + 2.0 * h)];
                let d1 = (-v[4] + 8.0 * v[3] - 8.0 * v[1] + v[0]) / (12.0 * h);
                let d2 =
                    (-v[4] + 16.0 * v[3] - 30.0 * v[2] + 16.0 * v[1] - v[0]) / (12.0 * h * h);
                let s = jacobi_s(kappa, r).unwrap();
                let sp = jacobi_s_prime(kappa, r).unwrap();
                let drift = (n as f64 - 1.0) * (sp / s) * d1;
                let residual = d2 + drift - 1.0;
                // relative to the stiffest term: high n and negative
                // curvature blow the derivatives up near small r, and
                // stencil truncation grows with them
                let scale = d2.abs().max(drift.abs()).max(1.0);
                assert!(
                    residual.abs() / scale < 1e-4,
                    "kappa={kappa} n={n} r={r}: residual {residual} against scale {scale}"
                );
            }
        }
    }
}

#[test]
fn phi_domain_errors() {
    assert!(matches!(
        phi(1, 0.0, 0.5, 1.0, PhiMethod::ClosedForm),
        Err(ExcessError::DimensionTooSmall { n: 1 })
    ));
    assert!(phi(2, 0.0, 0.0, 1.0, PhiMethod::ClosedForm).is_err());
    assert!(phi(2, 0.0, 2.0, 1.0, PhiMethod::ClosedForm).is_err());
    // spherical diameter: l too long at kappa = 1
    assert!(phi(2, 1.0, 0.5, 3.2, PhiMethod::Quadrature).is_err());
    assert!(phi(2, 1.0, 0.5, 3.0, PhiMethod::Quadrature).is_ok());
    // the closed form refuses curved input
    assert!(matches!(
        phi(2, -1.0, 0.5, 1.0, PhiMethod::ClosedForm),
        Err(ExcessError::ParamOutOfRange { name: "kappa", .. })
    ));
}

#[test]
fn g_function_frozen_value() {
    // (2 (n-1) / s) phi_3(1/2, 1) = 2 * phi_3(1/2, 1) = 5/12
    let g = g_function(0.5, 1.0, 2.0, 3, 0.0).unwrap();
    assert!((g - 5.0 / 12.0).abs() < 1e-15);
    // the eps slack enters through the endpoint
    let g = g_function(0.5, 0.4, 2.0, 3, 0.6).unwrap();
    assert!((g - 5.0 / 12.0).abs() < 1e-15);
    assert!(g_function(0.5, 0.2, 2.0, 3, 0.0).is_err(), "d beyond h + eps");
    assert!(g_function(0.0, 1.0, 2.0, 3, 0.0).is_err());
    assert!(g_function(0.5, 1.0, 0.0, 3, 0.0).is_err());
}

#[test]
fn ag_bound_frozen_values() {
    assert!((ag_bound(1.0, 26f64.sqrt(), 2).unwrap() - 1.5689290811054723).abs() < 1e-15);
    assert!((ag_bound(1.0, 2.0, 3).unwrap() - 8.0 / 2f64.sqrt()).abs() < 1e-15);
    assert_eq!(ag_bound(0.0, 5.0, 4).unwrap(), 0.0);
    assert!(ag_bound(-1.0, 5.0, 4).is_err());
    assert!(ag_bound(1.0, 0.0, 4).is_err());
    assert!(ag_bound(1.0, 1.0, 1).is_err());
}

#[test]
fn chain_holds_on_the_moderate_grid() {
    // unit-scale heights, separations a few times larger: every grid
    // point is either in-domain and passing or explicitly excluded
    for n in 2..=6 {
        for &h in &[1.0, 1.25, 1.5] {
            for &s in &[2.0, 3.0, 4.0, 5.0] {
                let rep = chain_bound_check(h, s, n, ChainConstant::Literal).unwrap();
                assert_ne!(
                    rep.verdict,
                    Verdict::Fail,
                    "n={n} h={h} s={s}: {:?}",
                    rep.violations
                );
            }
        }
    }
}

#[test]
fn chain_literal_pass_cases() {
    let rep = chain_bound_check(1.0, 2.0, 3, ChainConstant::Literal).unwrap();
    assert_eq!(rep.verdict, Verdict::Pass);
    assert!(rep.worst_margin.unwrap() > 0.0);
    let rep = chain_bound_check(1.0, 4.0, 2, ChainConstant::Literal).unwrap();
    assert_eq!(rep.verdict, Verdict::Pass);
}

#[test]
fn chain_literal_domain_exclusions() {
    // dip radius 2 h^n / s = 8 exceeds the height 2
    let rep = chain_bound_check(2.0, 4.0, 4, ChainConstant::Literal).unwrap();
    assert_eq!(rep.verdict, Verdict::DomainExcluded);
    // tall triple: h > s/2
    let rep = chain_bound_check(3.0, 4.0, 2, ChainConstant::Literal).unwrap();
    assert_eq!(rep.verdict, Verdict::DomainExcluded);
}

#[test]
fn chain_literal_counterexamples() {
    // the literal dip radius is not scale-covariant, and it loses to
    // the bound in three different corners of the parameter space:
    // small heights, high dimension, and extreme separation
    for (h, s, n) in [(0.2, 2.0, 3), (1.0, 6.0, 6), (1.0, 1000.0, 2)] {
        let rep = chain_bound_check(h, s, n, ChainConstant::Literal).unwrap();
        assert_eq!(
            rep.verdict,
            Verdict::Fail,
            "expected failure at h={h} s={s} n={n}"
        );
        assert!(rep.worst_margin.unwrap() < 0.0);
    }
}

#[test]
fn chain_normalized_holds_widely_above_two_dimensions() {
    // the scale-covariant dip radius repairs every n >= 3 corner,
    // including the literal counterexamples
    for n in 3..=6 {
        for &h in &[1e-3, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0] {
            for &mult in &[2.0, 2.5, 4.0, 10.0, 100.0, 1e5] {
                let s = mult * h;
                let rep = chain_bound_check(h, s, n, ChainConstant::Normalized).unwrap();
                assert_eq!(
                    rep.verdict,
                    Verdict::Pass,
                    "n={n} h={h} s={s}: {:?} {:?}",
                    rep.verdict,
                    rep.violations
                );
            }
        }
    }
    for (h, s, n) in [(0.2, 2.0, 3), (1.0, 6.0, 6)] {
        let rep = chain_bound_check(h, s, n, ChainConstant::Normalized).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
    }
}

#[test]
fn chain_normalized_coincides_with_literal_in_dimension_two() {
    // n = 2 leaves the two constants equal, so the extreme-separation
    // counterexample stands either way
    let rep = chain_bound_check(1.0, 1000.0, 2, ChainConstant::Normalized).unwrap();
    assert_eq!(rep.verdict, Verdict::Fail);
}

#[test]
fn chain_rejects_bad_parameters() {
    assert!(chain_bound_check(0.0, 1.0, 3, ChainConstant::Literal).is_err());
    assert!(chain_bound_check(1.0, -1.0, 3, ChainConstant::Literal).is_err());
    assert!(chain_bound_check(1.0, 1.0, 1, ChainConstant::Literal).is_err());
}
