//! A chart written in the expression language, checked like a catalog entry.
//!
//! The text below describes the same tractroid as the built-in
//! `pseudosphere`; the two agree to rounding.
//!
//! cargo run --release --example user_chart

use flatnormal::catalog::{self, expr::parse_chart};
use flatnormal::geometry::second_fundamental_form;
use flatnormal::verify::{verify_all, Sweep, SweepOptions, Tolerances};

const TEXT: &str = "
name = user_tractroid
dim = 2
ambient = euclidean 3
curvature = -1
domain = 0.3 3.0, 0 6.283185307179586
x1 = sech(u1) * cos(u2)
x2 = sech(u1) * sin(u2)
x3 = u1 - tanh(u1)
";

fn main() -> flatnormal::Result<()> {
    let chart = parse_chart(TEXT)?.into_chart()?;
    let builtin = catalog::pseudosphere().chart;
    for u in [[0.5, 0.1], [1.2, 2.0], [2.5, 4.0]] {
        let a = second_fundamental_form(&chart, &u)?;
        let b = second_fundamental_form(&builtin, &u)?;
        println!(
            "u = {u:?}: |Δg| = {:.1e}, |Δ‖α‖²| = {:.1e}",
            (&a.g - &b.g).amax(),
            (a.sff_norm_sq - b.sff_norm_sq).abs()
        );
    }
    let sweep = Sweep::new(&chart, &[129, 129], SweepOptions::default())?;
    for r in verify_all(&sweep, &Tolerances::for_engine(chart.engine())) {
        println!("  {}", r.summary_line());
    }

    match parse_chart(&TEXT.replace("tanh(u1)", "tanh(u1")) {
        Ok(_) => println!("unexpectedly parsed"),
        Err(e) => println!("broken chart: {e}"),
    }
    Ok(())
}
