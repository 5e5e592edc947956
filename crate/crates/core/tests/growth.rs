//! Growth analysis on the pseudosphere, Dini's surface and the hyperbolic chart.

use std::f64::consts::PI;

use flatnormal::catalog;
use flatnormal::config::RunConfig;
use flatnormal::geometry::first_fundamental_form;
use flatnormal::grid::GridSpec;
use flatnormal::growth::{
    ball_volume, distance_field, fit_exponential, growth_report, reference_volume, volume_bound, DistanceMethod,
    GrowthOptions, SampledMetric,
};
use flatnormal::report::{growth_summary, run_growth};
use flatnormal::verify::Status;
use proptest::prelude::*;

fn radii() -> Vec<f64> {
    (1..=8).map(|k| 0.25 * k as f64).collect()
}

#[test]
fn pseudosphere_table_has_eight_rows_with_bound_above_volume() {
    let entry = catalog::pseudosphere();
    let mut opts = GrowthOptions::for_dim(2);
    opts.counts = vec![129, 129];
    let report = growth_report(&entry.chart, &[1f64.asinh(), PI], &radii(), &opts).unwrap();
    assert_eq!(report.rows.len(), 8);
    for row in &report.rows {
        assert!(row.bound >= row.vol, "r = {}: bound {} < vol {}", row.r, row.bound, row.vol);
        assert!(row.ref_vol > 0.0 && row.s > 0.0);
        assert!((row.psi - row.r * (row.s + 1.0).sqrt()).abs() < 1e-12);
    }
    // S(r) is a running maximum over nested balls
    assert!(report.rows.windows(2).all(|w| w[1].s >= w[0].s));
    assert!(report.rows.last().unwrap().truncated);
    let summary = growth_summary(&report);
    assert!(summary.contains("WARN ball of radius 2 reaches the chart boundary"), "{summary}");
    // at 129 nodes the seed neighbourhood swallows the smallest ball, so the
    // length links may have no samples there; they must never fail
    for k in 0..4 {
        assert_ne!(report.link_status(k), Status::Fail, "{summary}");
    }
    assert_eq!(report.link_status(3), Status::Pass);
}

#[test]
fn growth_csv_has_fixed_header() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::for_chart("dini");
    cfg.resolution = Some(vec![65]);
    cfg.radii = vec![0.2, 0.4, 0.6, 0.8, 1.0];
    cfg.output = dir.path().to_path_buf();
    let outcome = run_growth(&cfg, false);
    assert_eq!(outcome.code, 0, "{}", outcome.summary);
    let csv = std::fs::read_to_string(dir.path().join("growth.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "r,S,psi,vol,bound,ref_vol");
    assert_eq!(lines.len(), 6);
    assert!(outcome.summary.contains("fit k="));
}

#[test]
fn injected_exponential_is_fitted_exactly() {
    let (k, ell) = (0.37, 1.9);
    let rows: Vec<(f64, f64)> = (1..=12)
        .map(|i| {
            let r = 0.25 * i as f64;
            (r, k * (ell * r).exp())
        })
        .collect();
    let fit = fit_exponential(&rows, None).unwrap();
    assert!((fit.k - k).abs() < 1e-10, "{}", fit.k);
    assert!((fit.ell - ell).abs() < 1e-10, "{}", fit.ell);
    assert!((fit.r_squared - 1.0).abs() < 1e-12);
    assert_eq!(fit.rows, 10);
}

#[test]
fn hyperbolic_oracles_at_moderate_resolution() {
    let chart = catalog::hyperbolic_plane().chart;
    let grid = GridSpec::uniform(chart.domain(), 129).unwrap();
    let metric = SampledMetric::new(grid.clone(), 2, |u| first_fundamental_form(&chart, u)).unwrap();
    let df = distance_field(&metric, &[0.0, 0.0], DistanceMethod::Refined).unwrap();
    for i in 0..grid.len() {
        let u = grid.node(i);
        let exact = 2.0 * (u[0] * u[0] + u[1] * u[1]).sqrt().atanh();
        if exact > 0.2 && exact <= 3.0 {
            assert!((df.values[i] - exact).abs() < 0.03 * exact, "{u:?}: {} vs {exact}", df.values[i]);
        }
    }
    for r in [0.5, 1.5, 2.5] {
        let v = ball_volume(&metric, &df, r).unwrap();
        let exact = 2.0 * PI * (r.cosh() - 1.0);
        assert!((v.volume - exact).abs() < 0.02 * exact, "r = {r}: {} vs {exact}", v.volume);
        assert!(!v.truncated);
    }
}

#[test]
fn reference_volume_matches_closed_forms() {
    for r in [0.5, 1.0, 2.0] {
        assert!((reference_volume(2, -1.0, r) - 2.0 * PI * (r.cosh() - 1.0)).abs() < 1e-10);
        assert!((reference_volume(2, 0.0, r) - PI * r * r).abs() < 1e-12);
        assert!((reference_volume(3, 0.0, r) - 4.0 / 3.0 * PI * r.powi(3)).abs() < 1e-12);
        assert!((reference_volume(2, 1.0, r) - 2.0 * PI * (1.0 - r.cos())).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn volume_bound_is_monotone(r in 0.01..5.0f64, dr in 0.0..1.0f64, s in 0.0..10.0f64, ds in 0.0..5.0f64, c in 0.1..3.0f64) {
        prop_assert!(volume_bound(2, r + dr, s + ds, c) >= volume_bound(2, r, s, c));
        prop_assert!(volume_bound(3, r + dr, s + ds, c) >= volume_bound(3, r, s, c));
    }
}
