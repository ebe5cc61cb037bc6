//! Experiment harness: S-CNE versus classical Stackelberg over generated
//! games, with deterministic reports.
//!
//! Every instance derives its own seed from the master seed and its index,
//! so results do not depend on how instances are scheduled across threads.
//! Rows are sorted by instance id and every float is rounded to 9
//! significant digits before aggregation, so aggregates can be recomputed
//! exactly from the serialized rows.

mod bench;
mod report;
mod signaling;

pub use bench::{bench_scaling, BenchRow};
pub use report::{Aggregate, InfoSensitivity, LayerHistogram, ProcurementSummary, TimingRow};
pub use signaling::{classify_signaling, uniform_equilibrium_welfare, SignalingClass};

use std::time::Instant;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{InformationStructure, Layer, LayeredStrategy, ScmasGame};
use crate::generators::{
    derive_seed, procurement, random_instance, synthetic, ContractorType, GeneratorError, GeneratorParams, PayoffDist,
    Topology, NOISE_LEVELS, SYNTHETIC_SUITE,
};
use crate::solvers::{approx_scne, classical_stackelberg, exact_scne, EquilibriumProfile, SolverConfig, SolverError};

/// Payoff scale of every generated game; approximation errors are divided
/// by it.
pub const PAYOFF_SCALE: f64 = 10.0;

const WELFARE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error("{0}")]
    InvalidParameter(String),
    #[error("no pure equilibrium in the induced action matrix")]
    NoPureEquilibrium,
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("thread pool: {0}")]
    Pool(String),
}

/// The sets random instance parameters are drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub sizes: Vec<usize>,
    pub topologies: Vec<Topology>,
    pub infos: Vec<InformationStructure>,
    pub payoff_dists: Vec<PayoffDist>,
    pub qualities: Vec<f64>,
}

impl Default for ParamGrid {
    /// All sizes, topologies, payoff families and quality levels, with
    /// perfect and mechanism information. Imperfect information is covered
    /// by the per-instance sensitivity columns instead; see
    /// [`ParamGrid::with_imperfect`].
    fn default() -> Self {
        Self {
            sizes: vec![2, 3, 4, 5],
            topologies: Topology::ALL.to_vec(),
            infos: vec![InformationStructure::Perfect, InformationStructure::Mechanism],
            payoff_dists: PayoffDist::ALL.to_vec(),
            qualities: vec![0.2, 0.4, 0.6, 0.8],
        }
    }
}

impl ParamGrid {
    /// The default grid plus the three imperfect-information noise levels.
    pub fn with_imperfect() -> Self {
        let mut g = Self::default();
        g.infos.extend(NOISE_LEVELS.iter().map(|&sigma| InformationStructure::Imperfect { sigma }));
        g
    }

    fn validate(&self) -> Result<(), ExperimentError> {
        if self.sizes.is_empty()
            || self.topologies.is_empty()
            || self.infos.is_empty()
            || self.payoff_dists.is_empty()
            || self.qualities.is_empty()
        {
            return Err(ExperimentError::InvalidParameter("every grid axis needs a value".into()));
        }
        Ok(())
    }

    /// Parameters of instance `index`, a pure function of `(master, index)`.
    pub fn draw(&self, master: u64, index: u64) -> GeneratorParams {
        let seed = derive_seed(master, index);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pick = |v: &[usize]| *v.choose(&mut rng).expect("nonempty");
        let nl = pick(&self.sizes);
        let nf = pick(&self.sizes);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        GeneratorParams {
            n_leader_actions: nl,
            n_follower_actions: nf,
            topology: *self.topologies.choose(&mut rng).expect("nonempty"),
            info: *self.infos.choose(&mut rng).expect("nonempty"),
            payoff_dist: *self.payoff_dists.choose(&mut rng).expect("nonempty"),
            instinct_quality: *self.qualities.choose(&mut rng).expect("nonempty"),
            seed,
        }
    }
}

/// Settings shared by every suite.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Worker threads; never affects results.
    pub jobs: usize,
    /// Wall-clock columns are filled only when set, since they break
    /// byte-for-byte reproducibility.
    pub record_timing: bool,
    pub approx_epsilon: f64,
    pub solver: SolverConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self { jobs: 1, record_timing: false, approx_epsilon: 0.05, solver: SolverConfig::default() }
    }
}

/// Echo of everything that determines a report, serialized with it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub suite: String,
    pub n_instances: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<ParamGrid>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub seeds: Vec<u64>,
    pub approx_epsilon: f64,
    pub record_timing: bool,
    pub solver: SolverConfig,
}

/// Welfare comparison of one game under one alternative information
/// structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityCell {
    pub info: String,
    pub scne_welfare: f64,
    pub classical_welfare: f64,
    pub welfare_delta: f64,
    pub pareto_improved: bool,
    /// Same path-of-play distribution as under perfect information.
    pub same_outcome_as_perfect: bool,
}

/// One solved instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRow {
    pub instance_id: usize,
    pub seed: u64,
    pub game: String,
    pub topology: String,
    pub nxl: usize,
    pub nxf: usize,
    pub info: String,
    pub payoff_dist: String,
    pub instinct_quality: Option<f64>,
    pub scne_welfare: Option<f64>,
    pub classical_welfare: Option<f64>,
    pub welfare_delta: Option<f64>,
    pub pareto_improved: Option<bool>,
    pub leader_layer: Option<Layer>,
    pub t_exact_s: Option<f64>,
    pub t_approx_s: Option<f64>,
    pub approx_error: Option<f64>,
    pub scne_leader: Option<LayeredStrategy>,
    pub scne_leader_payoff: Option<f64>,
    pub scne_follower_payoff: Option<f64>,
    pub classical_leader_payoff: Option<f64>,
    pub classical_follower_payoff: Option<f64>,
    /// `(x_L, x_F)` with the highest probability on the path of play.
    pub scne_outcome: Option<(usize, usize)>,
    pub classical_outcome: Option<(usize, usize)>,
    /// Probability that the follower plays action 0 (truthful bidding in
    /// the procurement suite).
    pub scne_compliance: Option<f64>,
    pub classical_compliance: Option<f64>,
    /// Perfect and mechanism information give the same path of play and
    /// welfare.
    pub info_invariant: Option<bool>,
    pub sensitivity: Vec<SensitivityCell>,
    #[serde(default)]
    pub params: Option<GeneratorParams>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ReportConfig,
    pub rows: Vec<InstanceRow>,
    pub aggregate: Aggregate,
}

/// Rounds to 9 significant digits, the precision of every report float.
pub fn round9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

struct Labels {
    instance_id: usize,
    seed: u64,
    topology: String,
    payoff_dist: String,
    instinct_quality: Option<f64>,
    params: Option<GeneratorParams>,
}

fn pareto_improved(s: &EquilibriumProfile, c: &EquilibriumProfile) -> bool {
    let ge = |a: f64, b: f64| a >= b - WELFARE_TOLERANCE;
    let gt = |a: f64, b: f64| a > b + WELFARE_TOLERANCE;
    ge(s.leader_payoff, c.leader_payoff)
        && ge(s.follower_payoff, c.follower_payoff)
        && (gt(s.leader_payoff, c.leader_payoff) || gt(s.follower_payoff, c.follower_payoff))
}

fn same_outcome(a: &EquilibriumProfile, b: &EquilibriumProfile) -> bool {
    (a.welfare - b.welfare).abs() <= WELFARE_TOLERANCE
        && a.outcome.iter().flatten().zip(b.outcome.iter().flatten()).all(|(p, q)| (p - q).abs() <= WELFARE_TOLERANCE)
}

fn timed<T>(on: bool, f: impl FnOnce() -> T) -> (T, Option<f64>) {
    let start = Instant::now();
    let out = f();
    (out, on.then(|| start.elapsed().as_secs_f64()))
}

/// Solves one game every way a row needs.
fn solve_row(game: &ScmasGame, labels: Labels, cfg: &ExperimentConfig) -> InstanceRow {
    let mut row = InstanceRow {
        instance_id: labels.instance_id,
        seed: labels.seed,
        game: game.meta.name.clone(),
        topology: labels.topology,
        nxl: game.n_leader(),
        nxf: game.n_follower(),
        info: game.info.label(),
        payoff_dist: labels.payoff_dist,
        instinct_quality: labels.instinct_quality,
        scne_welfare: None,
        classical_welfare: None,
        welfare_delta: None,
        pareto_improved: None,
        leader_layer: None,
        t_exact_s: None,
        t_approx_s: None,
        approx_error: None,
        scne_leader: None,
        scne_leader_payoff: None,
        scne_follower_payoff: None,
        classical_leader_payoff: None,
        classical_follower_payoff: None,
        scne_outcome: None,
        classical_outcome: None,
        scne_compliance: None,
        classical_compliance: None,
        info_invariant: None,
        sensitivity: Vec::new(),
        params: labels.params,
        error: None,
    };
    if let Err(e) = fill_row(game, cfg, &mut row) {
        row.error = Some(e.to_string());
    }
    row
}

fn fill_row(game: &ScmasGame, cfg: &ExperimentConfig, row: &mut InstanceRow) -> Result<(), SolverError> {
    let r = round9;
    let (scne, t_exact) = timed(cfg.record_timing, || exact_scne(game, &cfg.solver));
    let scne = scne?;
    let classical = classical_stackelberg(game, &cfg.solver)?;
    let (approx, t_approx) = timed(cfg.record_timing, || approx_scne(game, cfg.approx_epsilon, row.seed, &cfg.solver));
    let approx = approx?;

    let (sw, cw) = (r(scne.welfare), r(classical.welfare));
    row.scne_welfare = Some(sw);
    row.classical_welfare = Some(cw);
    row.welfare_delta = Some(r(scne.welfare - classical.welfare));
    row.pareto_improved = Some(pareto_improved(&scne, &classical));
    row.leader_layer = Some(scne.leader.layer());
    row.t_exact_s = t_exact.map(r);
    row.t_approx_s = t_approx.map(r);
    row.approx_error = Some(r((approx.leader_payoff - scne.leader_payoff).abs() / PAYOFF_SCALE));
    row.scne_leader = Some(scne.leader.clone());
    row.scne_leader_payoff = Some(r(scne.leader_payoff));
    row.scne_follower_payoff = Some(r(scne.follower_payoff));
    row.classical_leader_payoff = Some(r(classical.leader_payoff));
    row.classical_follower_payoff = Some(r(classical.follower_payoff));
    row.scne_outcome = Some(scne.modal_outcome());
    row.classical_outcome = Some(classical.modal_outcome());
    let compliance = |p: &EquilibriumProfile| r(p.outcome.iter().map(|row| row[0]).sum());
    row.scne_compliance = Some(compliance(&scne));
    row.classical_compliance = Some(compliance(&classical));

    let mut infos = vec![InformationStructure::Perfect, InformationStructure::Mechanism];
    infos.extend(NOISE_LEVELS.iter().map(|&sigma| InformationStructure::Imperfect { sigma }));
    let mut perfect: Option<EquilibriumProfile> = None;
    for info in infos {
        let g = game.with_info(info);
        let s = if info == game.info { scne.clone() } else { exact_scne(&g, &cfg.solver)? };
        let c = if info == game.info { classical.clone() } else { classical_stackelberg(&g, &cfg.solver)? };
        let base = perfect.get_or_insert_with(|| s.clone());
        row.sensitivity.push(SensitivityCell {
            info: info.label(),
            scne_welfare: r(s.welfare),
            classical_welfare: r(c.welfare),
            welfare_delta: r(s.welfare - c.welfare),
            pareto_improved: pareto_improved(&s, &c),
            same_outcome_as_perfect: same_outcome(base, &s),
        });
    }
    row.info_invariant = Some(row.sensitivity[1].same_outcome_as_perfect);
    Ok(())
}

fn run_parallel<T: Send>(
    jobs: usize,
    n: usize,
    f: impl Fn(usize) -> T + Sync + Send,
) -> Result<Vec<T>, ExperimentError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| ExperimentError::Pool(e.to_string()))?;
    Ok(pool.install(|| (0..n).into_par_iter().map(f).collect()))
}

fn finish(config: ReportConfig, mut rows: Vec<InstanceRow>) -> ExperimentReport {
    rows.sort_by_key(|r| r.instance_id);
    let aggregate = Aggregate::from_rows(&rows);
    ExperimentReport { config, rows, aggregate }
}

fn check_epsilon(cfg: &ExperimentConfig) -> Result<(), ExperimentError> {
    if !(cfg.approx_epsilon > 0.0 && cfg.approx_epsilon.is_finite()) {
        return Err(ExperimentError::InvalidParameter(format!(
            "approximation epsilon must be > 0, got {}",
            cfg.approx_epsilon
        )));
    }
    Ok(())
}

/// Random instances drawn from `grid`, each solved exactly, classically and
/// approximately.
pub fn run_monte_carlo(
    n_instances: usize,
    grid: &ParamGrid,
    seed: u64,
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport, ExperimentError> {
    if n_instances == 0 {
        return Err(ExperimentError::InvalidParameter("need at least one instance".into()));
    }
    grid.validate()?;
    check_epsilon(cfg)?;
    let rows = run_parallel(cfg.jobs, n_instances, |i| {
        let params = grid.draw(seed, i as u64);
        let labels = Labels {
            instance_id: i,
            seed: params.seed,
            topology: params.topology.to_string(),
            payoff_dist: params.payoff_dist.to_string(),
            instinct_quality: Some(params.instinct_quality),
            params: Some(params.clone()),
        };
        match random_instance(&params) {
            Ok(game) => solve_row(&game, labels, cfg),
            Err(e) => error_row(labels, &params, e.to_string()),
        }
    })?;
    let config = ReportConfig {
        suite: "monte_carlo".into(),
        n_instances,
        seed,
        grid: Some(grid.clone()),
        seeds: Vec::new(),
        approx_epsilon: cfg.approx_epsilon,
        record_timing: cfg.record_timing,
        solver: cfg.solver.clone(),
    };
    Ok(finish(config, rows))
}

fn error_row(labels: Labels, p: &GeneratorParams, message: String) -> InstanceRow {
    InstanceRow {
        instance_id: labels.instance_id,
        seed: labels.seed,
        game: String::new(),
        topology: labels.topology,
        nxl: p.n_leader_actions,
        nxf: p.n_follower_actions,
        info: p.info.label(),
        payoff_dist: labels.payoff_dist,
        instinct_quality: labels.instinct_quality,
        scne_welfare: None,
        classical_welfare: None,
        welfare_delta: None,
        pareto_improved: None,
        leader_layer: None,
        t_exact_s: None,
        t_approx_s: None,
        approx_error: None,
        scne_leader: None,
        scne_leader_payoff: None,
        scne_follower_payoff: None,
        classical_leader_payoff: None,
        classical_follower_payoff: None,
        scne_outcome: None,
        classical_outcome: None,
        scne_compliance: None,
        classical_compliance: None,
        info_invariant: None,
        sensitivity: Vec::new(),
        params: labels.params,
        error: Some(message),
    }
}

/// The five synthetic game types, once per seed.
pub fn run_synthetic_suite(seeds: &[u64], cfg: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    if seeds.is_empty() {
        return Err(ExperimentError::InvalidParameter("need at least one seed".into()));
    }
    check_epsilon(cfg)?;
    let k = SYNTHETIC_SUITE.len();
    let rows = run_parallel(cfg.jobs, seeds.len() * k, |i| {
        let (seed, name) = (seeds[i / k], SYNTHETIC_SUITE[i % k]);
        let labels = Labels {
            instance_id: i,
            seed,
            topology: name.to_string(),
            payoff_dist: "fixed".into(),
            instinct_quality: None,
            params: None,
        };
        let game = synthetic(name, seed).expect("suite names are valid");
        solve_row(&game, labels, cfg)
    })?;
    let config = ReportConfig {
        suite: "synthetic".into(),
        n_instances: rows.len(),
        seed: seeds[0],
        grid: None,
        seeds: seeds.to_vec(),
        approx_epsilon: cfg.approx_epsilon,
        record_timing: cfg.record_timing,
        solver: cfg.solver.clone(),
    };
    Ok(finish(config, rows))
}

/// `n_contracts / 2` honest and as many opportunistic contracts.
pub fn run_procurement(
    n_contracts: usize,
    seed: u64,
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport, ExperimentError> {
    if n_contracts == 0 || !n_contracts.is_multiple_of(2) {
        return Err(ExperimentError::InvalidParameter(format!(
            "contract count must be even and positive, got {n_contracts}"
        )));
    }
    check_epsilon(cfg)?;
    let half = n_contracts / 2;
    let rows = run_parallel(cfg.jobs, n_contracts, |i| {
        let kind = if i < half { ContractorType::Honest } else { ContractorType::Opportunistic };
        let s = derive_seed(seed, i as u64);
        let labels = Labels {
            instance_id: i,
            seed: s,
            topology: format!("procurement-{kind}"),
            payoff_dist: "fixed".into(),
            instinct_quality: None,
            params: None,
        };
        let game = procurement(kind, s).expect("procurement games are valid");
        solve_row(&game, labels, cfg)
    })?;
    let config = ReportConfig {
        suite: "procurement".into(),
        n_instances: n_contracts,
        seed,
        grid: None,
        seeds: Vec::new(),
        approx_epsilon: cfg.approx_epsilon,
        record_timing: cfg.record_timing,
        solver: cfg.solver.clone(),
    };
    let mut report = finish(config, rows);
    report.aggregate.procurement = Some(ProcurementSummary::from_rows(&report.rows));
    Ok(report)
}
