use alexlab::critical::{
    contradiction_margin, critical_scan, gamma_threshold, geodesic_placement_check,
    is_critical, known_curvature_lower_bound, theorem_constants, CriticalError,
    Criticality, ScanOptions,
};
use alexlab::generators::{make_space, SpaceKind};
use alexlab::metric_core::FiniteMetricSpace;
use alexlab::report::Verdict;
use std::f64::consts::{FRAC_PI_2, PI};

fn euclidean_plane(radius: f64) -> alexlab::generators::AnalyticSpace {
    make_space(SpaceKind::EuclideanBall { n: 2, radius }).unwrap()
}

/// Base point, candidate, and a 12-point ring of given radius around
/// the candidate, in chart coordinates. The candidate is index 1, the
/// ring occupies indices 2..14.
fn ring_space(
    space: &alexlab::generators::AnalyticSpace,
    p: Vec<f64>,
    q: Vec<f64>,
    ring: impl Fn(f64) -> Vec<f64>,
    members: usize,
) -> FiniteMetricSpace {
    let mut pts = vec![p, q];
    for j in 0..members {
        pts.push(ring(2.0 * PI * j as f64 / members as f64));
    }
    FiniteMetricSpace::from_exact_points(space, pts).unwrap()
}

#[test]
fn flat_points_are_regular() {
    // ring around q = (2, 0): the point extending the segment from the
    // origin past q sees the base point at comparison angle exactly pi
    let sp = euclidean_plane(10.0);
    let fms = ring_space(
        &sp,
        vec![0.0, 0.0],
        vec![2.0, 0.0],
        |t| vec![2.0 + 0.4 * t.cos(), 0.4 * t.sin()],
        12,
    );
    let verdict = is_critical(&fms, 0.0, 0, 1, 0.5, 0.05).unwrap();
    match verdict {
        Criticality::Regular { witness, angle } => {
            assert_eq!(witness, 2); // the ring point at angle 0: (2.4, 0)
            assert!((angle - PI).abs() < 1e-12);
        }
        other => panic!("expected a regular verdict, got {other:?}"),
    }
    assert!(!verdict.is_critical());

    // each ring angle is acos(-cos t) exactly; check one off-axis value
    let v = is_critical(&fms, 0.0, 0, 1, 0.5, 3.0).unwrap();
    match v {
        Criticality::Critical { population, worst_angle } => {
            // at an absurd tolerance everything reads critical, which
            // also pins the population and the maximum angle
            assert_eq!(population, 12);
            assert!((worst_angle - PI).abs() < 1e-12);
        }
        other => panic!("expected critical at huge tol, got {other:?}"),
    }
}

#[test]
fn cone_points_are_regular_from_the_apex() {
    let sp = make_space(SpaceKind::ConeOverCircle { rho: 0.5, radius: 4.0 }).unwrap();
    let fms = ring_space(
        &sp,
        vec![0.0, 0.0],
        vec![1.0, 0.5],
        |t| vec![1.0 + 0.3 * t.cos(), 0.5 + 0.2 * t.sin()],
        12,
    );
    // the radially outward ring point (1.3, 0.5) extends the ray from
    // the apex: d(apex, x) = 1.3 exactly, comparison angle exactly pi
    match is_critical(&fms, 0.0, 0, 1, 0.35, 0.1).unwrap() {
        Criticality::Regular { witness, angle } => {
            assert_eq!(witness, 2);
            assert!((angle - PI).abs() < 1e-12);
        }
        other => panic!("expected regular, got {other:?}"),
    }
}

#[test]
fn cylinder_antipode_is_critical() {
    // on the flat cylinder of circumference 2 pi, the point opposite
    // the base point at the same height is reached by two wrapping
    // minimizers; every nearby direction keeps comparison angle <= pi/2
    let sp = make_space(SpaceKind::FlatCylinder { rho: 1.0, half_height: 6.0 }).unwrap();
    let fms = ring_space(
        &sp,
        vec![0.0, 0.0],
        vec![PI, 0.0],
        |t| vec![PI + 0.4 * t.cos(), 0.4 * t.sin()],
        12,
    );
    match is_critical(&fms, 0.0, 0, 1, 0.5, 0.01).unwrap() {
        Criticality::Critical { population, worst_angle } => {
            assert_eq!(population, 12);
            // the straight-up ring point sits at angle pi/2 exactly
            assert!((worst_angle - FRAC_PI_2).abs() < 1e-12);
        }
        other => panic!("expected critical, got {other:?}"),
    }

    // two units up the same line the straight-up direction becomes a
    // witness: angle acos(-2 / sqrt(pi^2 + 4)) > pi/2
    let fms_up = ring_space(
        &sp,
        vec![0.0, 0.0],
        vec![PI, 2.0],
        |t| vec![PI + 0.4 * t.cos(), 2.0 + 0.4 * t.sin()],
        12,
    );
    match is_critical(&fms_up, 0.0, 0, 1, 0.5, 0.1).unwrap() {
        Criticality::Regular { angle, .. } => {
            assert!((angle - 2.1377078317359060).abs() < 1e-12);
        }
        other => panic!("expected regular above the antipode, got {other:?}"),
    }
}

#[test]
fn criticality_is_monotone_in_tolerance() {
    // at height 0.3 on the antipodal line the worst annulus angle is
    // pi/2 + 0.0952..., so the verdict flips exactly once as the
    // tolerance grows through it
    let sp = make_space(SpaceKind::FlatCylinder { rho: 1.0, half_height: 6.0 }).unwrap();
    let fms = ring_space(
        &sp,
        vec![0.0, 0.0],
        vec![PI, 0.3],
        |t| vec![PI + 0.4 * t.cos(), 0.3 + 0.4 * t.sin()],
        12,
    );
    let worst = 1.6660006067017767; // acos(-0.24 / (0.8 sqrt(pi^2 + 0.09)))
    let mut seen_critical = false;
    for tol in [0.02, 0.05, 0.09, 0.096, 0.15, 0.3] {
        let v = is_critical(&fms, 0.0, 0, 1, 0.5, tol).unwrap();
        match v {
            Criticality::Regular { angle, .. } => {
                assert!(!seen_critical, "verdict flipped back at tol {tol}");
                assert!((angle - worst).abs() < 1e-12);
                assert!(worst > FRAC_PI_2 + tol);
            }
            Criticality::Critical { worst_angle, .. } => {
                seen_critical = true;
                assert!((worst_angle - worst).abs() < 1e-12);
                assert!(worst <= FRAC_PI_2 + tol);
            }
            Criticality::Inconclusive { .. } => panic!("ring is fully populated"),
        }
    }
    assert!(seen_critical);
}

#[test]
fn sparse_annuli_are_inconclusive() {
    let sp = euclidean_plane(10.0);
    let fms = ring_space(
        &sp,
        vec![0.0, 0.0],
        vec![2.0, 0.0],
        |t| vec![2.0 + 0.4 * t.cos(), 0.4 * t.sin()],
        5,
    );
    assert_eq!(
        is_critical(&fms, 0.0, 0, 1, 0.5, 0.1).unwrap(),
        Criticality::Inconclusive { population: 5 }
    );
}

#[test]
fn criticality_rejects_bad_input() {
    let sp = euclidean_plane(10.0);
    let fms = ring_space(
        &sp,
        vec![0.0, 0.0],
        vec![2.0, 0.0],
        |t| vec![2.0 + 0.4 * t.cos(), 0.4 * t.sin()],
        12,
    );
    assert!(matches!(
        is_critical(&fms, 0.0, 1, 1, 0.5, 0.1),
        Err(CriticalError::Space(_))
    ));
    assert!(matches!(
        is_critical(&fms, 0.0, 0, 99, 0.5, 0.1),
        Err(CriticalError::Space(_))
    ));
    assert!(matches!(
        is_critical(&fms, 0.0, 0, 1, 0.0, 0.1),
        Err(CriticalError::ParamOutOfRange { name: "annulus_radius", .. })
    ));
    assert!(matches!(
        is_critical(&fms, 0.0, 0, 1, 0.5, -0.1),
        Err(CriticalError::ParamOutOfRange { name: "tol", .. })
    ));
}

#[test]
fn scan_finds_the_cylinder_antipode_and_nothing_farther() {
    let ms = make_space(SpaceKind::FlatCylinder { rho: 1.0, half_height: 6.0 })
        .unwrap()
        .sample(3000, 11)
        .unwrap();
    let fms = ms.base();
    let p = ms.distinguished_index().unwrap();
    let opts = ScanOptions {
        tol: 0.2,
        candidate_cap: 600,
        seed: 5,
        ..ScanOptions::default()
    };

    // shells straddling the antipodal distance pi
    let rep = critical_scan(fms, p, &[2.6, PI, 3.7], &opts).unwrap();
    assert_eq!(rep.kappa, 0.0);
    assert!(!rep.hits.is_empty(), "antipode not detected");
    for hit in &rep.hits {
        assert!(
            (hit.distance - PI).abs() < 0.29,
            "critical point away from the antipodal shell at distance {}",
            hit.distance
        );
        assert!(hit.worst_angle <= FRAC_PI_2 + opts.tol);
    }
    let largest = rep.largest_critical_radius.unwrap();
    assert!((largest - PI).abs() < 0.29);
    assert!(rep.assessment.contains("no critical points detected beyond"));

    // farther shells: every point has a strictly expanding direction
    // (roughly straight up the cylinder), so nothing is critical
    let far = critical_scan(fms, p, &[4.4, 5.2], &opts).unwrap();
    assert!(far.hits.is_empty());
    assert!(far.largest_critical_radius.is_none());
    assert!(far.candidates_tested > 50);
    assert!(far.assessment.contains("no critical points detected at any scanned radius"));
}

#[test]
fn scans_on_flat_and_conical_samples_find_nothing() {
    for kind in [
        SpaceKind::EuclideanBall { n: 2, radius: 4.0 },
        SpaceKind::ConeOverCircle { rho: 0.5, radius: 4.0 },
    ] {
        let ms = make_space(kind).unwrap().sample(1500, 3).unwrap();
        let fms = ms.base();
        let p = ms.distinguished_index().unwrap();
        let rep = critical_scan(fms, p, &[1.0, 2.0, 3.0], &ScanOptions::default()).unwrap();
        assert_eq!(rep.kappa, 0.0);
        assert!(rep.hits.is_empty(), "spurious critical points: {:?}", rep.hits);
        assert!(rep.candidates_tested > 0);
    }
}

#[test]
fn scan_uses_the_generator_curvature_bound() {
    let ms = make_space(SpaceKind::HyperbolicDisk { kappa: -1.0, radius: 3.0 })
        .unwrap()
        .sample(600, 19)
        .unwrap();
    assert_eq!(known_curvature_lower_bound(ms.base()), Some(-1.0));
    let p = ms.distinguished_index().unwrap();
    let rep = critical_scan(ms.base(), p, &[1.5], &ScanOptions::default()).unwrap();
    assert_eq!(rep.kappa, -1.0);
    assert!(rep.hits.is_empty());

    let forced = critical_scan(
        ms.base(),
        p,
        &[1.5],
        &ScanOptions { kappa: Some(-2.0), ..ScanOptions::default() },
    )
    .unwrap();
    assert_eq!(forced.kappa, -2.0);
}

#[test]
fn scan_on_a_graph_backing_estimates_curvature() {
    let ms = make_space(SpaceKind::ParaboloidPatch { a: 0.5, radius: 2.0 })
        .unwrap()
        .sample(500, 23)
        .unwrap();
    let fms = ms.base();
    assert!(fms.is_graph());
    assert_eq!(known_curvature_lower_bound(fms), None);
    let p = ms.distinguished_index().unwrap();
    let rep = critical_scan(fms, p, &[1.0], &ScanOptions { tol: 0.3, ..ScanOptions::default() })
        .unwrap();
    assert!(rep.kappa > -4.0 && rep.kappa < 4.0);
    assert!(rep.hits.is_empty(), "graph scan hits: {:?}", rep.hits);
}

#[test]
fn scan_validates_the_radius_grid() {
    let ms = euclidean_plane(4.0).sample(200, 1).unwrap();
    let fms = ms.base();
    assert!(matches!(
        critical_scan(fms, 0, &[], &ScanOptions::default()),
        Err(CriticalError::BadRadiusGrid)
    ));
    assert!(matches!(
        critical_scan(fms, 0, &[2.0, 1.0], &ScanOptions::default()),
        Err(CriticalError::BadRadiusGrid)
    ));
    assert!(matches!(
        critical_scan(fms, 0, &[-1.0, 1.0], &ScanOptions::default()),
        Err(CriticalError::BadRadiusGrid)
    ));
    // 0.8 of the truncation radius caps the trusted region
    assert!(matches!(
        critical_scan(fms, 0, &[3.9], &ScanOptions::default()),
        Err(CriticalError::OutsideTrustedRegion { .. })
    ));
    assert!(matches!(
        critical_scan(fms, 999, &[1.0], &ScanOptions::default()),
        Err(CriticalError::Space(_))
    ));
}

#[test]
fn scan_reports_are_deterministic() {
    let ms = make_space(SpaceKind::FlatCylinder { rho: 1.0, half_height: 6.0 })
        .unwrap()
        .sample(800, 7)
        .unwrap();
    let p = ms.distinguished_index().unwrap();
    let opts = ScanOptions { tol: 0.2, seed: 9, ..ScanOptions::default() };
    let a = critical_scan(ms.base(), p, &[2.0, 3.0], &opts).unwrap();
    let b = critical_scan(ms.base(), p, &[2.0, 3.0], &opts).unwrap();
    assert_eq!(a.to_json(), b.to_json());
}

#[test]
fn gamma_threshold_frozen_values() {
    // 1 / (1 + 2^2 / 0.1^2) = 1/401
    let g = gamma_threshold(0.1, 2.0, 2, None).unwrap();
    assert!((g - 0.0024937655860349127).abs() < 1e-15);
    // intermediate form at cbar = 4:
    // 1 / (1 + 25 * 4 / (0.01 * 12)) = 3/2503
    let gi = gamma_threshold(0.1, 2.0, 2, Some(4.0)).unwrap();
    assert!((gi - 0.0011985617259288853).abs() < 1e-15);
    // large cbar recovers the threshold form
    let glim = gamma_threshold(0.1, 2.0, 2, Some(1e6)).unwrap();
    assert!((glim - g).abs() / g < 1e-4);

    assert!(matches!(
        gamma_threshold(0.0, 2.0, 2, None),
        Err(CriticalError::ParamOutOfRange { name: "eps", .. })
    ));
    assert!(matches!(
        gamma_threshold(0.1, 1.0, 2, None),
        Err(CriticalError::ParamOutOfRange { name: "C", .. })
    ));
    assert!(matches!(
        gamma_threshold(0.1, 2.0, 1, None),
        Err(CriticalError::DimensionTooSmall { n: 1 })
    ));
    assert!(matches!(
        gamma_threshold(0.1, 2.0, 2, Some(2.0)),
        Err(CriticalError::ParamOutOfRange { name: "cbar", .. })
    ));
}

#[test]
fn gamma_threshold_monotonicity() {
    for n in 2..=5usize {
        let mut prev = 0.0;
        for eps in [0.05, 0.1, 0.2, 0.5, 1.0, 2.0] {
            let g = gamma_threshold(eps, 2.0, n, None).unwrap();
            assert!(g > prev, "not increasing in eps at n = {n}");
            prev = g;
        }
        let mut prev = 1.0;
        for big_c in [1.1, 1.5, 2.0, 4.0, 8.0] {
            let g = gamma_threshold(0.3, big_c, n, None).unwrap();
            assert!(g < prev, "not decreasing in C at n = {n}");
            prev = g;
        }
        // the intermediate form never exceeds the threshold form and
        // increases toward it in cbar
        for big_c in [1.5, 2.0, 4.0] {
            let g = gamma_threshold(0.3, big_c, n, None).unwrap();
            let mut prev = 0.0;
            for factor in [1.01, 2.0, 10.0, 1e3] {
                let gi = gamma_threshold(0.3, big_c, n, Some(big_c * factor)).unwrap();
                assert!(gi <= g + 1e-15);
                assert!(gi > prev);
                prev = gi;
            }
        }
    }
}

#[test]
fn theorem_constants_frozen_values() {
    let tc = theorem_constants(2, 1.0, None).unwrap();
    // (ln 2 / 8)^{1/2}
    assert!((tc.epsilon_max - 0.2943525056288687).abs() < 1e-15);
    assert!((tc.epsilon_hat - 0.99 * tc.epsilon_max).abs() < 1e-15);
    assert!(tc.alpha_min > 0.0 && tc.alpha_min < 1.0);

    // at the threshold scale itself the volume constant is frozen
    let at_max = theorem_constants(2, 1.0, Some(tc.epsilon_max)).unwrap();
    assert!((at_max.alpha_min - 0.9787983953722233).abs() < 1e-14);
    // smaller working scale means a threshold closer to 1
    assert!(tc.alpha_min > at_max.alpha_min);

    // dimension 3: exponent (n-1)/n = 2/3
    let t3 = theorem_constants(3, 1.0, None).unwrap();
    assert!((t3.epsilon_max - 0.19580494219366283).abs() < 1e-15);

    // decreasing in kappa
    let half = theorem_constants(2, 0.5, None).unwrap();
    let two = theorem_constants(2, 2.0, None).unwrap();
    assert!(half.epsilon_max > tc.epsilon_max && tc.epsilon_max > two.epsilon_max);

    assert!(matches!(
        theorem_constants(1, 1.0, None),
        Err(CriticalError::DimensionTooSmall { n: 1 })
    ));
    assert!(matches!(
        theorem_constants(2, 0.0, None),
        Err(CriticalError::ParamOutOfRange { name: "kappa", .. })
    ));
    assert!(matches!(
        theorem_constants(2, -1.0, None),
        Err(CriticalError::ParamOutOfRange { name: "kappa", .. })
    ));
    assert!(matches!(
        theorem_constants(2, 1.0, Some(0.5)),
        Err(CriticalError::ParamOutOfRange { name: "epsilon_hat", .. })
    ));
    assert!(matches!(
        theorem_constants(2, 1.0, Some(0.0)),
        Err(CriticalError::ParamOutOfRange { name: "epsilon_hat", .. })
    ));
}

#[test]
fn contradiction_margin_frozen_and_sharp() {
    // frozen spot value: excess lower bound at (1, 5) minus 8 * 0.2^2
    let m = contradiction_margin(2, 1.0, 0.2, 5.0).unwrap();
    assert!((m - 0.3731925815203158).abs() < 1e-14);

    // the margin stays above its infimum ln 2 - 0.32 for every radius
    for i in 0..=60 {
        let big_r = 0.1 * 10f64.powf(4.0 * i as f64 / 60.0);
        let m = contradiction_margin(2, 1.0, 0.2, big_r).unwrap();
        assert!(m > 2f64.ln() - 0.32 - 1e-12);
    }

    // below the threshold scale the margin is positive on the whole
    // grid; just above it the large-radius margin goes negative
    for n in [2usize, 3, 4] {
        for kappa in [0.5, 1.0, 2.0] {
            let em = theorem_constants(n, kappa, None).unwrap().epsilon_max;
            for i in 0..=60 {
                let big_r = 0.1 * 10f64.powf(4.0 * i as f64 / 60.0);
                let m = contradiction_margin(n, kappa, 0.99 * em, big_r).unwrap();
                assert!(m > 0.0, "margin not positive at n={n}, kappa={kappa}, R={big_r}");
            }
            let beyond = contradiction_margin(n, kappa, 1.01 * em, 1000.0 / kappa).unwrap();
            assert!(beyond < 0.0, "threshold not sharp at n={n}, kappa={kappa}");
        }
    }

    assert!(matches!(
        contradiction_margin(1, 1.0, 0.2, 5.0),
        Err(CriticalError::DimensionTooSmall { n: 1 })
    ));
    assert!(matches!(
        contradiction_margin(2, 1.0, 0.0, 5.0),
        Err(CriticalError::ParamOutOfRange { name: "eps", .. })
    ));
    // the excess lower bound itself rejects non-positive curvature
    assert!(contradiction_margin(2, -1.0, 0.2, 5.0).is_err());
}

#[test]
fn placement_passes_on_flat_and_conical_samples() {
    let ms = euclidean_plane(4.0).sample(1200, 5).unwrap();
    let p = ms.distinguished_index().unwrap();
    let rep = geodesic_placement_check(ms.base(), p, 3.0, 0.3, 1.0, 17).unwrap();
    assert_eq!(rep.verdict, Verdict::Pass);
    assert!(rep.items_tested > 40);
    assert!(rep.worst_margin.unwrap() >= 0.0);

    let cone = make_space(SpaceKind::ConeOverCircle { rho: 0.5, radius: 4.0 })
        .unwrap()
        .sample(1200, 7)
        .unwrap();
    let p = cone.distinguished_index().unwrap();
    let rep = geodesic_placement_check(cone.base(), p, 3.0, 0.25, 1.0, 17).unwrap();
    assert_eq!(rep.verdict, Verdict::Pass);
    assert!(rep.items_tested > 40);
}

#[test]
fn placement_fails_sideways_on_the_cylinder() {
    // far points all sit near the axis direction, so geodesics from the
    // center can never pass near test points off to the side
    let ms = make_space(SpaceKind::FlatCylinder { rho: 1.0, half_height: 14.0 })
        .unwrap()
        .sample(1600, 13)
        .unwrap();
    let p = ms.distinguished_index().unwrap();
    let rep = geodesic_placement_check(ms.base(), p, 3.0, 0.1, 4.0, 17).unwrap();
    assert_eq!(rep.verdict, Verdict::Fail);
    assert!(rep.violations.len() >= 10);
    assert!(rep.worst_margin.unwrap() < 0.0);
    // points near the axis still resolve
    assert!((rep.violations.len() as u64) < rep.items_tested);
}

#[test]
fn placement_without_far_points_is_inconclusive() {
    let ms = euclidean_plane(4.0).sample(600, 3).unwrap();
    let p = ms.distinguished_index().unwrap();
    let rep = geodesic_placement_check(ms.base(), p, 5.0, 0.3, 1.0, 1).unwrap();
    assert_eq!(rep.verdict, Verdict::Inconclusive);
    assert_eq!(rep.items_tested, 0);
}

#[test]
fn placement_rejects_bad_parameters() {
    let ms = euclidean_plane(4.0).sample(200, 3).unwrap();
    let fms = ms.base();
    assert!(matches!(
        geodesic_placement_check(fms, 0, 1.0, 0.3, 1.0, 0),
        Err(CriticalError::ParamOutOfRange { name: "C", .. })
    ));
    assert!(matches!(
        geodesic_placement_check(fms, 0, 3.0, 0.0, 1.0, 0),
        Err(CriticalError::ParamOutOfRange { name: "eps", .. })
    ));
    assert!(matches!(
        geodesic_placement_check(fms, 0, 3.0, 0.3, -1.0, 0),
        Err(CriticalError::ParamOutOfRange { name: "r", .. })
    ));
    assert!(matches!(
        geodesic_placement_check(fms, 9999, 3.0, 0.3, 1.0, 0),
        Err(CriticalError::Space(_))
    ));
}
