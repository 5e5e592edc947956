//! First and second fundamental forms at a few points, next to closed forms.
//!
//! The tractroid `(sech u cos v, sech u sin v, u − tanh u)` has
//! `g = diag(tanh² u, sech² u)` and principal curvatures `sinh u` and `−1/sinh u`
//! along the unit normal.
//!
//! cargo run --release --example fundamental_forms

use flatnormal::catalog;
use flatnormal::geometry::{normal_bundle_is_flat, second_fundamental_form, Engine};

fn main() -> flatnormal::Result<()> {
    let ps = catalog::pseudosphere();
    for engine in [Engine::Ad, Engine::fd()] {
        let chart = ps.chart.clone().with_engine(engine)?;
        println!("pseudosphere [{engine}]");
        for u in [0.5, 1.0, 2.0] {
            let fd = second_fundamental_form(&chart, &[u, 1.0])?;
            let exact_g = [u.tanh().powi(2), 1.0 / u.cosh().powi(2)];
            let dg = (fd.g[(0, 0)] - exact_g[0]).abs().max((fd.g[(1, 1)] - exact_g[1]).abs()).max(fd.g[(0, 1)].abs());
            // ‖α‖² = Σ κ_i² for a hypersurface
            let exact_s = u.sinh().powi(2) + 1.0 / u.sinh().powi(2);
            println!("  u = {u}: |g - exact| = {dg:.2e}, ‖α‖² = {:.12} (exact {exact_s:.12})", fd.sff_norm_sq);
        }
    }

    for entry in [catalog::clifford_torus_s3(std::f64::consts::FRAC_PI_4)?, catalog::veronese()] {
        let u = entry.centre();
        let (flat, residual) = normal_bundle_is_flat(&entry.chart, &u, 1e-6)?;
        let fd = second_fundamental_form(&entry.chart, &u)?;
        println!(
            "{} at {u:?}: p = {}, ‖α‖² = {:.6}, normal curvature {residual:.2e}, flat: {flat}",
            entry.name,
            entry.p(),
            fd.sff_norm_sq
        );
    }
    Ok(())
}
