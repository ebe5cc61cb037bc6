//! Scaling benchmark of the exact and approximate solvers.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{round9, ExperimentError, PAYOFF_SCALE};
use crate::generators::{bench_instance, derive_seed};
use crate::solvers::{approx_scne, exact_scne, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub size: usize,
    pub instances: usize,
    /// Absent above the exact solver's action cap.
    pub median_exact_s: Option<f64>,
    pub median_approx_s: f64,
    /// Mean `|approx - exact|` leader payoff on the `[0, 1]` scale, where
    /// exact is available.
    pub mean_error: Option<f64>,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

/// Times both solvers on `instances_per_size` benchmark games per size.
/// Instance `j` of size `n` uses seed `derive_seed(seed, 1000 n + j)`.
pub fn bench_scaling(
    sizes: &[usize],
    epsilon: f64,
    seed: u64,
    instances_per_size: usize,
    cfg: &SolverConfig,
) -> Result<Vec<BenchRow>, ExperimentError> {
    if instances_per_size == 0 {
        return Err(ExperimentError::InvalidParameter("need at least one instance per size".into()));
    }
    let mut out = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let with_exact = size <= cfg.max_actions;
        let (mut t_exact, mut t_approx, mut errors) = (Vec::new(), Vec::new(), Vec::new());
        for j in 0..instances_per_size {
            let game = bench_instance(size, derive_seed(seed, (size * 1000 + j) as u64))?;
            let instance_seed = derive_seed(seed ^ 0xa99, (size * 1000 + j) as u64);
            let start = Instant::now();
            let approx = approx_scne(&game, epsilon, instance_seed, cfg)?;
            t_approx.push(start.elapsed().as_secs_f64());
            if with_exact {
                let start = Instant::now();
                let exact = exact_scne(&game, cfg)?;
                t_exact.push(start.elapsed().as_secs_f64());
                errors.push((approx.leader_payoff - exact.leader_payoff).abs() / PAYOFF_SCALE);
            }
        }
        out.push(BenchRow {
            size,
            instances: instances_per_size,
            median_exact_s: with_exact.then(|| round9(median(t_exact))),
            median_approx_s: round9(median(t_approx)),
            mean_error: with_exact.then(|| round9(errors.iter().sum::<f64>() / errors.len() as f64)),
        });
    }
    Ok(out)
}
