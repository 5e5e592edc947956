//! Principal coordinates from the flows of `Y_i = λ_i X_i`.
//!
//! On the pseudosphere `Y_1 = ∂u` and `Y_2 = ∂v` (up to sign), so the map is a
//! translation and every check is sharp.
//!
//! cargo run --release --example principal_coordinates

use flatnormal::catalog;
use flatnormal::coords::{
    build_flow_map, check_homomorphism, check_injectivity, commutator_residual, round_trip_error,
    verify_principal_frame_property, FlowOptions,
};

fn main() -> flatnormal::Result<()> {
    let opts = FlowOptions::default();
    let cases = vec![
        (catalog::pseudosphere(), vec![0.881373587019543, 3.0], 0.4),
        (catalog::dini(1.0, 0.5)?, vec![3.0, 0.8], 0.2),
        (catalog::clifford_torus_s3(std::f64::consts::FRAC_PI_4)?, vec![3.0, 3.0], 0.5),
    ];
    for (entry, x0, half) in cases {
        let chart = &entry.chart;
        println!("{}  x0 = {x0:?}", chart.name());
        let h: Vec<f64> = vec![1e-3; chart.dim()];
        println!("  commutator       {:.3e}", commutator_residual(chart, &x0, &h, opts.seed)?);
        for i in 0..chart.dim() {
            println!("  round trip Y_{}   {:.3e}", i + 1, round_trip_error(chart, &x0, i, half, &opts)?);
        }
        let t_box = vec![(-half, half); chart.dim()];
        let map = build_flow_map(chart, &x0, &t_box, &[21, 21], &opts)?;
        for w in &map.warnings {
            println!("  WARN {w}");
        }
        println!("  F(0) = {:?}", map.point(map.grid.flat_index(&[10, 10])));
        println!("  {}", check_homomorphism(chart, &map, 100, 1e-6).summary_line());
        let fp = verify_principal_frame_property(chart, &map, 1e-3);
        for r in [&fp.orthonormal, &fp.principal, &fp.pullback] {
            println!("  {}", r.summary_line());
        }
        let inj = check_injectivity(chart, &map)?;
        println!("  injectivity min distance {:.4} > {:.4}: {}", inj.min_distance, inj.threshold, inj.passed());
    }
    Ok(())
}
