//! Exact and sampling solvers across action-space sizes.

use scmas::experiments::bench_scaling;
use scmas::SolverConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SolverConfig::default();
    println!("size\texact_s\t\tapprox_s\terror");
    for row in bench_scaling(&[2, 3, 4, 5, 8, 12, 20], 0.05, 1, 10, &cfg)? {
        let show = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3e}"));
        println!("{}\t{}\t{:.3e}\t{}", row.size, show(row.median_exact_s), row.median_approx_s, show(row.mean_error));
    }
    Ok(())
}
