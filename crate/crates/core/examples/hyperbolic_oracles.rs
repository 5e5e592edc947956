//! Grid distances, ball volumes and the growth fit against the closed forms
//! of the hyperbolic plane in Poincaré-disk coordinates.
//!
//! cargo run --release --example hyperbolic_oracles

use std::f64::consts::PI;

use flatnormal::catalog;
use flatnormal::geometry::first_fundamental_form;
use flatnormal::grid::GridSpec;
use flatnormal::growth::{
    ball_volume, distance_field, fit_exponential, reference_volume, DistanceMethod, SampledMetric,
};

fn main() -> flatnormal::Result<()> {
    let chart = catalog::hyperbolic_plane().chart;
    for res in [65, 129, 257] {
        let grid = GridSpec::uniform(chart.domain(), res)?;
        let metric = SampledMetric::new(grid.clone(), 2, |u| first_fundamental_form(&chart, u))?;
        println!("{res}x{res}");
        for method in [DistanceMethod::Graph, DistanceMethod::Refined] {
            let df = distance_field(&metric, &[0.0, 0.0], method)?;
            let mut worst: f64 = 0.0;
            for i in 0..grid.len() {
                let u = grid.node(i);
                let exact = 2.0 * (u[0] * u[0] + u[1] * u[1]).sqrt().atanh();
                if exact > 0.2 && exact <= 3.5 {
                    worst = worst.max((df.values[i] - exact).abs() / exact);
                }
            }
            println!("  {method:?} distance: worst relative error {worst:.3e} ({} sweeps)", df.sweeps);
            let mut vol_err: f64 = 0.0;
            for r in [0.5, 1.0, 1.5, 2.0, 2.5, 3.0] {
                let v = ball_volume(&metric, &df, r)?;
                let exact = 2.0 * PI * (r.cosh() - 1.0);
                vol_err = vol_err.max((v.volume - exact).abs() / exact);
            }
            println!("  {method:?} volume r <= 3: worst relative error {vol_err:.3e}");
        }
    }
    let rows: Vec<(f64, f64)> = (0..=24)
        .map(|k| {
            let r = 0.25 * k as f64;
            (r, reference_volume(2, -1.0, r))
        })
        .filter(|p| p.0 > 0.0)
        .collect();
    let fit = fit_exponential(&rows, Some((3.0, 6.0)))?;
    println!("reference volume fit on [3, 6]: k = {:.4}, l = {:.4}, R^2 = {:.6}", fit.k, fit.ell, fit.r_squared);
    Ok(())
}
