//! Principal coordinates: closed-form flow on the pseudosphere, checks on Dini
//! and the Clifford torus.

use flatnormal::catalog;
use flatnormal::coords::{
    build_flow_map, check_homomorphism, check_injectivity, commutator_residual, compose_flows, flow_with_gauge,
    initial_gauge, integrate_flow, round_trip_error, verify_principal_frame_property, FlowOptions,
};
use flatnormal::Error;
use proptest::prelude::*;

const X0: [f64; 2] = [0.881373587019543, 3.0];

#[test]
fn pseudosphere_flow_is_a_translation() {
    // Y_1 = ±∂u and Y_2 = ±∂v, so F(t) = x0 + (±t1, ±t2)
    let chart = catalog::pseudosphere().chart;
    let opts = FlowOptions::default();
    let map = build_flow_map(&chart, &X0, &[(-0.4, 0.4), (-0.4, 0.4)], &[9, 9], &opts).unwrap();
    assert!(!map.is_shrunk());
    let mut signs = [0.0; 2];
    for (t, u) in map.rows() {
        for k in 0..2 {
            if t[k] != 0.0 {
                let s = (u[k] - X0[k]) / t[k];
                if signs[k] == 0.0 {
                    signs[k] = s.signum();
                }
                assert!((s - signs[k]).abs() < 1e-10, "t = {t:?}, u = {u:?}");
            } else {
                assert!((u[k] - X0[k]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn dini_and_clifford_checks() {
    let opts = FlowOptions::default();
    let cases = [
        (catalog::dini(1.0, 0.5).unwrap(), vec![3.0, 0.8], 0.2),
        (catalog::clifford_torus_s3(std::f64::consts::FRAC_PI_4).unwrap(), vec![3.0, 3.0], 0.5),
    ];
    for (entry, x0, half) in cases {
        let chart = &entry.chart;
        assert!(commutator_residual(chart, &x0, &[1e-3, 1e-3], opts.seed).unwrap() < 1e-4);
        for i in 0..2 {
            assert!(round_trip_error(chart, &x0, i, half, &opts).unwrap() < 1e-8);
        }
        let map = build_flow_map(chart, &x0, &[(-half, half), (-half, half)], &[11, 11], &opts).unwrap();
        let h = check_homomorphism(chart, &map, 100, 1e-6);
        assert!(h.passed(), "{}", h.summary_line());
        assert_eq!(h.points, 100);
        let fp = verify_principal_frame_property(chart, &map, 1e-3);
        for r in [&fp.orthonormal, &fp.principal, &fp.pullback] {
            assert!(r.passed(), "{}", r.summary_line());
        }
        assert!(check_injectivity(chart, &map).unwrap().passed());
    }
}

#[test]
fn sphere_has_no_principal_fields() {
    let entry = catalog::sphere_negative_control(1.0).unwrap();
    let err = integrate_flow(&entry.chart, &entry.centre(), 0, 0.1, &FlowOptions::default()).unwrap_err();
    assert!(matches!(err, Error::Hypothesis(_)), "{err:?}");
}

#[test]
fn box_must_contain_zero() {
    let chart = catalog::pseudosphere().chart;
    let r = build_flow_map(&chart, &X0, &[(0.1, 0.4), (-0.4, 0.4)], &[5, 5], &FlowOptions::default());
    assert!(matches!(r, Err(Error::Argument(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn dini_flows_commute(t in -0.15..0.15f64, s in -0.15..0.15f64) {
        let chart = catalog::dini(1.0, 0.5).unwrap().chart;
        let opts = FlowOptions::default();
        let x0 = [3.0, 0.8];
        let gauge = initial_gauge(&chart, &x0, opts.seed).unwrap();
        let (a, _) = compose_flows(&chart, &x0, &gauge, &[t, s], &opts).unwrap();
        let (y, g) = flow_with_gauge(&chart, &x0, &gauge, 1, s, &opts).unwrap();
        let (b, _) = flow_with_gauge(&chart, &y, &g, 0, t, &opts).unwrap();
        prop_assert!((a[0] - b[0]).abs().max((a[1] - b[1]).abs()) < 1e-8);
    }
}
