//! Principal normals `η_i`, the factors `λ_i = 1/√(‖η_i‖² + C)` and the
//! comparison metric `g⁰ = C g + III` at a point of each hypothesis chart.
//!
//! `⟨η_i, η_j⟩ = c − c̃` for `i ≠ j` and `g⁰` is positive definite.
//!
//! cargo run --release --example principal_normals

use flatnormal::catalog;
use flatnormal::geometry::second_fundamental_form;
use flatnormal::principal::{comparison_metric, principal_decomposition, third_fundamental_form, DEFAULT_SEED};

fn main() -> flatnormal::Result<()> {
    let entries = [
        catalog::pseudosphere(),
        catalog::dini(1.0, 0.5)?,
        catalog::clifford_torus_s3(std::f64::consts::FRAC_PI_4)?,
        catalog::sphere_negative_control(1.0)?,
    ];
    for entry in entries {
        let u = entry.centre();
        let fd = second_fundamental_form(&entry.chart, &u)?;
        let big_c = entry.chart.big_c();
        let d = principal_decomposition(&fd, big_c, DEFAULT_SEED)?;
        println!("{} at {u:?}: s = {}, C = {big_c}", entry.name, d.s());
        for (i, eta) in d.normals.iter().enumerate() {
            println!("  η_{} = {:?}  mult {}  λ = {:?}", i + 1, eta.eta.as_slice(), eta.multiplicity(), eta.lambda);
        }
        if d.s() == 2 {
            let dot = d.normals[0].eta.dot(&d.normals[1].eta);
            println!("  ⟨η_1, η_2⟩ = {dot:.15} (c − c̃ = {})", entry.c() - entry.c_tilde());
        }
        match comparison_metric(&fd, &third_fundamental_form(&fd), big_c, false) {
            Ok(m) => println!("  g⁰ = {:?}  positive definite: {}", m.g0.as_slice(), m.positive_definite),
            Err(e) => println!("  g⁰ unavailable: {e}"),
        }
    }
    Ok(())
}
