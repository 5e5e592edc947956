//! A curvature −1 patch integrated from the sine-Gordon 1-soliton
//! `φ = 4 arctan(e^{u+v})`, refined until the metric and curvature settle.
//!
//! cargo run --release --example sine_gordon_patch

use flatnormal::catalog::sine_gordon::soliton_surface;
use flatnormal::verify::{verify_all, Sweep, SweepOptions, Tolerances};

fn main() -> flatnormal::Result<()> {
    for res in [41, 81, 121, 161] {
        let s = soliton_surface(res)?;
        println!(
            "{res:>4} nodes: |φ_uv − sin φ| {:.2e}  monodromy {:.2e}  |g − I| {:.2e}  |K + 1| {:.2e}",
            s.phi_residual,
            s.monodromy,
            s.metric_error()?,
            s.curvature_error()?
        );
    }
    let s = soliton_surface(121)?;
    let sweep = Sweep::new(&s.chart, &[], SweepOptions::default())?;
    for r in verify_all(&sweep, &Tolerances::for_engine(s.chart.engine())) {
        println!("  {}", r.summary_line());
    }
    Ok(())
}
