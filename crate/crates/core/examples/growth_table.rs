//! Growth table and comparison chain around a point of the pseudosphere and
//! of Dini's helicoid.
//!
//! cargo run --release --example growth_table

use std::time::Instant;

use flatnormal::catalog;
use flatnormal::growth::{growth_report, GrowthOptions, LINK_NAMES};

fn main() -> flatnormal::Result<()> {
    let radii: Vec<f64> = (1..=8).map(|k| 0.25 * k as f64).collect();
    let cases = vec![
        (catalog::pseudosphere(), vec![1f64.asinh(), std::f64::consts::PI]),
        (catalog::dini(1.0, 0.5)?, catalog::dini(1.0, 0.5)?.centre()),
    ];
    for (entry, anchor) in cases {
        let t = Instant::now();
        let report = growth_report(&entry.chart, &anchor, &radii, &GrowthOptions::for_dim(2))?;
        println!("{} at {anchor:?} ({:.1}s)", report.chart, t.elapsed().as_secs_f64());
        println!(
            "  {:>5} {:>10} {:>9} {:>9} {:>10} {:>9}  le/di/balls/volume margins",
            "r", "S", "psi", "vol", "bound", "ref_vol"
        );
        for row in &report.rows {
            let margins: Vec<String> =
                row.links.iter().map(|l| format!("{}:{:.3}", &l.status.label()[..1], l.margin)).collect();
            println!(
                "  {:>5.2} {:>10.4} {:>9.4} {:>9.4} {:>10.4} {:>9.4}  {}{}",
                row.r,
                row.s,
                row.psi,
                row.vol,
                row.bound,
                row.ref_vol,
                margins.join(" "),
                if row.truncated { "  truncated" } else { "" }
            );
        }
        for (k, name) in LINK_NAMES.iter().enumerate() {
            println!("  {name}: {}", report.link_status(k));
        }
        match (&report.fit, &report.fit_error) {
            (Some(f), _) => {
                println!("  fit max|alpha| ~ {:.4} e^({:.4} r), R^2 = {:.4} on {:?}", f.k, f.ell, f.r_squared, f.window)
            }
            (_, Some(e)) => println!("  fit: {e}"),
            _ => {}
        }
    }
    Ok(())
}
