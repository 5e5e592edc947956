//! Gauss, Codazzi, connection-formula and g⁰-flatness residuals for the
//! closed-form catalog charts.
//!
//! cargo run --release --example lemma_residuals

use std::time::Instant;

use flatnormal::catalog;
use flatnormal::geometry::Engine;
use flatnormal::verify::{verify_all, Sweep, SweepOptions, Tolerances};

fn main() -> flatnormal::Result<()> {
    let entries = vec![
        catalog::pseudosphere(),
        catalog::dini(1.0, 0.5)?,
        catalog::clifford_torus_s3(std::f64::consts::FRAC_PI_4)?,
        catalog::ps3(),
        catalog::sphere_negative_control(1.0)?,
        catalog::veronese(),
    ];
    for entry in entries {
        for engine in [Engine::Ad, Engine::fd()] {
            let chart = entry.chart.clone().with_engine(engine)?;
            let res = if chart.dim() == 3 { 25 } else { 129 };
            let t = Instant::now();
            let sweep = Sweep::new(&chart, &vec![res; chart.dim()], SweepOptions::default())?;
            let reports = verify_all(&sweep, &Tolerances::for_engine(engine));
            println!("{} [{}] {:.2}s", chart.name(), engine, t.elapsed().as_secs_f64());
            for r in reports {
                println!("  {}", r.summary_line());
            }
        }
    }
    Ok(())
}
