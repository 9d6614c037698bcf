use alexlab::excess::{
    ag_bound, excess, height, verify_excess_on_space, ExcessSampleConfig,
};
use alexlab::generators::{make_space, SpaceKind};
use alexlab::metric_core::FiniteMetricSpace;
use alexlab::report::Verdict;
use std::f64::consts::PI;

#[test]
fn flat_triple_excess_and_height() {
    let sp = make_space(SpaceKind::EuclideanBall { n: 2, radius: 10.0 }).unwrap();
    let fms = FiniteMetricSpace::from_exact_points(
        &sp,
        vec![
            vec![-5.0, 0.0],
            vec![5.0, 0.0],
            vec![0.0, 1.0],
            vec![2.0, 0.0],
        ],
    )
    .unwrap();
    let e = excess(&fms, 0, 1, 2).unwrap();
    // 2 (sqrt 26 - 5)
    assert!((e - 0.19803902718556966).abs() < 1e-14);
    // the midpoint of the discretized geodesic is hit exactly, so the
    // height is exactly 1
    let h = height(&fms, 0, 1, 2).unwrap();
    assert_eq!(h, 1.0);
    // e <= bound with room: 8 h^2 / s = 0.8
    let bound = ag_bound(h, fms.distance(0, 1), 2).unwrap();
    assert!((bound - 0.8).abs() < 1e-15);
    assert!(e < bound);
    // excess is symmetric in p and q, zero when x sits on the segment
    assert!((excess(&fms, 1, 0, 2).unwrap() - e).abs() < 1e-15);
    assert_eq!(excess(&fms, 0, 1, 3).unwrap(), 0.0);
    assert!(excess(&fms, 0, 1, 7).is_err());
}

#[test]
fn excess_below_twice_height_everywhere() {
    let ms = make_space(SpaceKind::ConeOverCircle { rho: 0.7, radius: 4.0 })
        .unwrap()
        .sample(300, 41)
        .unwrap();
    let fms = ms.base();
    let triples = [(0usize, 7usize, 19usize), (3, 250, 99), (13, 170, 44), (220, 10, 150)];
    for (p, q, x) in triples {
        let e = excess(fms, p, q, x).unwrap();
        let h = height(fms, p, q, x).unwrap();
        assert!(e >= -1e-12);
        // the discretized height over-estimates the true one, so the
        // classical comparison e <= 2h survives discretization
        assert!(e <= 2.0 * h + 1e-9, "triple ({p},{q},{x}): e={e} h={h}");
    }
}

#[test]
fn hyperbolic_triple_breaks_the_flat_bound() {
    // an exact long thin triangle in curvature -1: endpoints 22 apart,
    // apex at height 1 over the midpoint. The excess tends to
    // 2 ln cosh(1) ~ 0.868 as the triangle stretches, while the bound
    // 8 h^2 / s decays with the endpoint distance s ~ 11.43
    let sp = make_space(SpaceKind::HyperbolicDisk { kappa: -1.0, radius: 12.5 }).unwrap();
    let fms = FiniteMetricSpace::from_exact_points(
        &sp,
        vec![vec![11.0, 0.0], vec![11.0, PI], vec![1.0, 0.5 * PI]],
    )
    .unwrap();
    assert!((fms.distance(0, 1) - 22.0).abs() < 1e-12);
    let h = height(&fms, 0, 1, 2).unwrap();
    assert!((h - 1.0).abs() < 1e-9, "height {h}");
    let e = excess(&fms, 0, 1, 2).unwrap();
    let endpoint = (11f64.cosh() * 1f64.cosh()).acosh();
    assert!((e - (2.0 * endpoint - 22.0)).abs() < 1e-10);
    let s = fms.distance(0, 2).min(fms.distance(1, 2));
    assert!((s - endpoint).abs() < 1e-12);
    let bound = ag_bound(h, s, 2).unwrap();
    assert!(e > bound + 0.16, "excess {e} must beat the bound {bound}");
}

#[test]
fn sampled_flat_spaces_verify() {
    for kind in [
        SpaceKind::EuclideanBall { n: 2, radius: 4.0 },
        SpaceKind::ConeOverCircle { rho: 0.6, radius: 4.0 },
        SpaceKind::FlatCylinder { rho: 1.0, half_height: 3.0 },
    ] {
        let ms = make_space(kind.clone()).unwrap().sample(1200, 71).unwrap();
        let rep = verify_excess_on_space(
            ms.base(),
            &ExcessSampleConfig { triples: 1200, seed: 9 },
        )
        .unwrap();
        assert_eq!(rep.verdict, Verdict::Pass, "{kind:?}: {:?}", rep.violations);
        assert!(rep.items_tested > 50, "{kind:?}: too few admissible triples");
        assert!(rep.worst_margin.unwrap() > 0.0);
    }
}

#[test]
fn sampled_euclidean_three_space_verifies() {
    let ms = make_space(SpaceKind::EuclideanBall { n: 3, radius: 3.0 })
        .unwrap()
        .sample(1200, 5)
        .unwrap();
    let rep = verify_excess_on_space(
        ms.base(),
        &ExcessSampleConfig { triples: 1600, seed: 2 },
    )
    .unwrap();
    assert_eq!(rep.verdict, Verdict::Pass, "{:?}", rep.violations);
    // the n = 3 admissibility filter 2 h^2 <= s rejects most fat
    // random triples, so the tested share is well below the draw count
    assert!(rep.items_tested > 40, "only {} admissible", rep.items_tested);
}

#[test]
fn paraboloid_graph_verifies_with_net_slack() {
    let ms = make_space(SpaceKind::ParaboloidPatch { a: 1.0, radius: 1.0 })
        .unwrap()
        .sample(800, 23)
        .unwrap();
    let rep = verify_excess_on_space(
        ms.base(),
        &ExcessSampleConfig { triples: 256, seed: 4 },
    )
    .unwrap();
    assert_eq!(rep.verdict, Verdict::Pass, "{:?}", rep.violations);
    assert!(rep.items_tested > 100);
    assert!(rep.tolerance > 0.0, "graph slack must be positive");
}

#[test]
fn all_tall_triples_is_inconclusive() {
    // an equilateral triangle: whichever two points play the base, the
    // third sits higher than half the separation, so nothing qualifies
    let sp = make_space(SpaceKind::EuclideanBall { n: 2, radius: 5.0 }).unwrap();
    let fms = FiniteMetricSpace::from_exact_points(
        &sp,
        vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.5, 3f64.sqrt() / 2.0],
        ],
    )
    .unwrap();
    let rep = verify_excess_on_space(&fms, &ExcessSampleConfig { triples: 64, seed: 1 }).unwrap();
    assert_eq!(rep.verdict, Verdict::Inconclusive);
    assert_eq!(rep.items_tested, 0);
}

#[test]
fn verify_rejects_degenerate_input() {
    let sp = make_space(SpaceKind::EuclideanBall { n: 2, radius: 5.0 }).unwrap();
    let fms = FiniteMetricSpace::from_exact_points(&sp, vec![vec![0.0, 0.0], vec![1.0, 0.0]])
        .unwrap();
    assert!(verify_excess_on_space(&fms, &ExcessSampleConfig::default()).is_err());
}

#[test]
fn reports_are_deterministic() {
    let ms = make_space(SpaceKind::ConeOverCircle { rho: 0.5, radius: 4.0 })
        .unwrap()
        .sample(600, 3)
        .unwrap();
    let cfg = ExcessSampleConfig { triples: 128, seed: 11 };
    let a = verify_excess_on_space(ms.base(), &cfg).unwrap();
    let b = verify_excess_on_space(ms.base(), &cfg).unwrap();
    assert_eq!(a.to_json(), b.to_json());
}
