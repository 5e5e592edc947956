//! Every catalog entry's claims, re-derived from its chart.

use flatnormal::catalog::{self, CatalogEntry};
use flatnormal::geometry::{normal_curvature_residual, second_fundamental_form};
use flatnormal::grid::GridSpec;
use flatnormal::principal::{principal_decomposition, DEFAULT_SEED};
use flatnormal::verify::{check_intrinsic_curvature, sweep_grid};

/// The usable domain with a fraction `f` of each side trimmed.
fn inset(entry: &CatalogEntry, f: f64) -> Vec<(f64, f64)> {
    entry
        .chart
        .usable_domain()
        .iter()
        .map(|d| {
            let w = d.1 - d.0;
            (d.0 + f * w, d.1 - f * w)
        })
        .collect()
}

/// A 4-per-axis sample of interior points; sample nodes for sampled charts.
fn probes(entry: &CatalogEntry) -> Vec<Vec<f64>> {
    if entry.chart.map().samples().is_some() {
        let grid = sweep_grid(&entry.chart, &[]).unwrap();
        return (0..grid.len()).step_by(grid.len() / 16 + 1).map(|i| grid.node(i)).collect();
    }
    let grid = GridSpec::uniform(&inset(entry, 0.15), 4).unwrap();
    (0..grid.len()).map(|i| grid.node(i)).filter(|u| entry.chart.in_usable_domain(u)).collect()
}

fn entries() -> Vec<CatalogEntry> {
    catalog::list().iter().map(|l| catalog::lookup(l.name, &[]).unwrap()).collect()
}

#[test]
fn every_listing_resolves() {
    let names: Vec<String> = entries().into_iter().map(|e| e.name).collect();
    assert_eq!(names.len(), 11);
    assert!(names.contains(&"sine_gordon_soliton".to_string()));
}

#[test]
fn claims_are_rederived() {
    for entry in entries() {
        let exp = entry.expected;
        let name = &entry.name;
        assert_eq!(entry.chart.big_c() > 0.0, exp.big_c_positive, "{name}: sign of C");
        let points = probes(&entry);
        assert!(points.len() >= 8, "{name}: too few probe points");
        let mut flat = true;
        let mut simple = true;
        for u in &points {
            let fd = second_fundamental_form(&entry.chart, u).unwrap();
            let r = normal_curvature_residual(&fd);
            flat &= r <= 1e-6 * (1.0 + fd.sff_norm_sq);
            if exp.flat_normal_bundle {
                let d = principal_decomposition(&fd, entry.chart.big_c(), DEFAULT_SEED).unwrap();
                simple &= d.is_simple();
            }
        }
        assert_eq!(flat, exp.flat_normal_bundle, "{name}: normal bundle flatness");
        if exp.flat_normal_bundle {
            assert_eq!(simple, exp.distinct_principal_normals, "{name}: distinct principal normals");
        }
        // sampled charts use their own nodes; the inset keeps the hyperbolic
        // chart away from the rim where its metric blows up
        let n = entry.n();
        let grid = if entry.chart.map().samples().is_some() {
            sweep_grid(&entry.chart, &[]).unwrap()
        } else {
            GridSpec::over(&inset(&entry, 0.25), &vec![if n == 2 { 41 } else { 17 }; n]).unwrap()
        };
        // fourth-order differences of the metric; a curvature defect is O(1)
        let report = check_intrinsic_curvature(&entry.chart, &grid, 1e-3);
        assert!(report.points > 0, "{name}: no curvature samples");
        assert_eq!(report.passed(), exp.constant_curvature, "{name}: constant curvature ({})", report.summary_line());
    }
}

#[test]
fn parameters_are_validated() {
    assert!(catalog::lookup("dini", &[("c".into(), 1.0)]).is_err());
    assert!(catalog::lookup("dini", &[("a".into(), -1.0)]).is_err());
    assert!(catalog::lookup("nope", &[]).is_err());
    assert!(catalog::lookup("sine_gordon_soliton", &[("resolution".into(), 9.0)]).is_err());
    let d = catalog::lookup("dini", &[("a".into(), 2.0)]).unwrap();
    assert_eq!(d.c(), -1.0 / 4.25);
}

#[test]
fn dini_with_zero_pitch_is_a_scaled_tractroid() {
    // b = 0 gives a·(sin v cos u, sin v sin u, cos v + ln tan(v/2)), curvature −1/a²
    let d = catalog::dini(2.0, 0.0).unwrap();
    assert_eq!(d.c(), -0.25);
    let fd = second_fundamental_form(&d.chart, &[1.0, 0.9]).unwrap();
    let s = &fd.orthonormal_shape_operators()[0];
    assert!((s.determinant() + 0.25).abs() < 1e-12);
}
