//! The `scmas` command line.
//!
//! Exit codes: 0 on success, 1 on i/o failure or a failed check, 2 on
//! invalid flags or input.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::experiments::{
    bench_scaling, run_monte_carlo, run_procurement, run_synthetic_suite, ExperimentConfig, ExperimentError,
    ExperimentReport, ParamGrid,
};
use crate::format::{game_from_json, game_to_json};
use crate::game::InformationStructure;
use crate::generators::{
    procurement, random_instance, synthetic, ContractorType, GeneratorError, GeneratorParams, PayoffDist, Topology,
};
use crate::qbf::{exhaustive_family, parse_qdimacs, random_qbf, verify_reduction_detail, QbfError};
use crate::solvers::{approx_scne, classical_stackelberg, exact_scne, satisficing_scne, SolverConfig, SolverError};

#[derive(Debug, Parser)]
#[command(name = "scmas", version, about = "Sequential causal Stackelberg games: generate, solve, experiment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a game as JSON.
    Generate(GenerateArgs),
    /// Solve a game file and print the equilibrium profile as JSON.
    Solve(SolveArgs),
    /// Run an experiment suite and write its report.
    Experiment(ExperimentArgs),
    /// Time the exact and approximate solvers across action-space sizes.
    Bench(BenchArgs),
    /// Check the QBF-to-game reduction against brute force.
    Qbf(QbfArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Synthetic,
    Random,
    Procurement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InfoKind {
    Perfect,
    Imperfect,
    Mechanism,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Generator family.
    kind: Kind,
    /// Synthetic game name (synthetic only).
    name: Option<String>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Leader action count (random only).
    #[arg(long, default_value_t = 3)]
    nxl: usize,
    /// Follower action count (random only).
    #[arg(long, default_value_t = 3)]
    nxf: usize,
    /// Causal topology (random only).
    #[arg(long, default_value = "independent")]
    topology: Topology,
    /// Probability that an instinct hits the Stackelberg action (random only).
    #[arg(long, default_value_t = 0.6)]
    quality: f64,
    /// Information structure (random only).
    #[arg(long, value_enum, default_value_t = InfoKind::Perfect)]
    info: InfoKind,
    /// Observation noise for `--info imperfect`.
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    /// Payoff distribution (random only).
    #[arg(long, default_value = "uniform")]
    payoff_dist: PayoffDist,
    /// Contractor type (procurement only).
    #[arg(long = "type", default_value = "honest")]
    contractor: ContractorType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodKind {
    Exact,
    Classical,
    Approx,
    Satisficing,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Game JSON file.
    game: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodKind::Exact)]
    method: MethodKind,
    /// Accuracy of the approximate solver.
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    /// Sampling seed of the approximate solver.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Slack of the satisficing follower.
    #[arg(long, default_value_t = 0.0)]
    eps_sat: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
enum Suite {
    MonteCarlo,
    Synthetic,
    Procurement,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long, value_enum)]
    suite: Suite,
    /// Instances (monte_carlo, default 50), seeds (synthetic, default 10,
    /// counting up from --seed) or contracts (procurement, default 240).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker threads; results are identical for every value.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Write the per-instance CSV here.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write the JSON report here. With neither --csv nor --json the JSON
    /// report goes to stdout.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Record wall-clock columns (breaks byte-for-byte reproducibility).
    #[arg(long)]
    timing: bool,
    #[arg(long, default_value_t = 0.05)]
    approx_epsilon: f64,
    /// Also draw imperfect-information instances (monte_carlo only).
    #[arg(long)]
    imperfect: bool,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = vec![2, 3, 4, 5, 20])]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Instances per size.
    #[arg(long, default_value_t = 30)]
    instances: usize,
    /// Write the table here instead of stdout.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false, id = "source")]
struct QbfSource {
    /// QDIMACS file to verify.
    #[arg(long)]
    verify: Option<PathBuf>,
    /// Verify every formula with K existential and K universal variables
    /// and at most two clauses (K is 1 or 2).
    #[arg(long, value_name = "K")]
    exhaustive: Option<usize>,
    /// Verify N seeded random formulas.
    #[arg(long, value_name = "N")]
    random: Option<usize>,
}

#[derive(Debug, Args)]
struct QbfArgs {
    #[command(flatten)]
    source: QbfSource,
    /// First seed for --random.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    exists: usize,
    #[arg(long, default_value_t = 3)]
    forall: usize,
    #[arg(long, default_value_t = 4)]
    clauses: usize,
    #[arg(long, default_value_t = 3)]
    width: usize,
}

enum CliError {
    Invalid(String),
    Failed(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Failed(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Invalid(m) | CliError::Failed(m) => m,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failed(e.to_string())
    }
}

impl From<GeneratorError> for CliError {
    fn from(e: GeneratorError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<QbfError> for CliError {
    fn from(e: QbfError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Io(e) => CliError::Failed(e.to_string()),
            ExperimentError::Csv(e) => CliError::Failed(e.to_string()),
            ExperimentError::Pool(m) => CliError::Failed(m),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

/// Runs the command line on `args` (program name first) and returns the
/// exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.code()
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = SolverConfig::from_env()?;
    match command {
        Command::Generate(a) => generate(a, out),
        Command::Solve(a) => solve(a, &cfg, out),
        Command::Experiment(a) => experiment(a, cfg, out),
        Command::Bench(a) => bench(a, &cfg, out),
        Command::Qbf(a) => qbf(a, out),
    }
}

fn emit(text: &str, path: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("outputs always serialize");
    s.push('\n');
    s
}

fn info_of(kind: InfoKind, sigma: f64) -> InformationStructure {
    match kind {
        InfoKind::Perfect => InformationStructure::Perfect,
        InfoKind::Mechanism => InformationStructure::Mechanism,
        InfoKind::Imperfect => InformationStructure::Imperfect { sigma },
    }
}

fn generate(a: GenerateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if a.name.is_some() && a.kind != Kind::Synthetic {
        return Err(CliError::Invalid("a game name is only accepted by `generate synthetic`".into()));
    }
    let game = match a.kind {
        Kind::Synthetic => {
            let name =
                a.name.as_deref().ok_or_else(|| CliError::Invalid("`generate synthetic` needs a game name".into()))?;
            synthetic(name, a.seed)?
        }
        Kind::Random => random_instance(&GeneratorParams {
            n_leader_actions: a.nxl,
            n_follower_actions: a.nxf,
            topology: a.topology,
            info: info_of(a.info, a.sigma),
            payoff_dist: a.payoff_dist,
            instinct_quality: a.quality,
            seed: a.seed,
        })?,
        Kind::Procurement => procurement(a.contractor, a.seed)?,
    };
    emit(&game_to_json(&game), a.out.as_deref(), out)
}

fn solve(a: SolveArgs, cfg: &SolverConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&a.game).map_err(|e| CliError::Failed(format!("{}: {e}", a.game.display())))?;
    let game = game_from_json(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", a.game.display())))?;
    let profile = match a.method {
        MethodKind::Exact => exact_scne(&game, cfg)?,
        MethodKind::Classical => classical_stackelberg(&game, cfg)?,
        MethodKind::Approx => approx_scne(&game, a.epsilon, a.seed, cfg)?,
        MethodKind::Satisficing => satisficing_scne(&game, a.eps_sat, cfg)?,
    };
    emit(&to_json(&profile), None, out)
}

fn experiment(a: ExperimentArgs, solver: SolverConfig, out: &mut dyn Write) -> Result<(), CliError> {
    if a.jobs == 0 {
        return Err(CliError::Invalid("--jobs must be at least 1".into()));
    }
    if a.imperfect && a.suite != Suite::MonteCarlo {
        return Err(CliError::Invalid("--imperfect applies to the monte_carlo suite only".into()));
    }
    let cfg = ExperimentConfig { jobs: a.jobs, record_timing: a.timing, approx_epsilon: a.approx_epsilon, solver };
    let report: ExperimentReport = match a.suite {
        Suite::MonteCarlo => {
            let grid = if a.imperfect { ParamGrid::with_imperfect() } else { ParamGrid::default() };
            run_monte_carlo(a.n.unwrap_or(50), &grid, a.seed, &cfg)?
        }
        Suite::Synthetic => {
            let n = a.n.unwrap_or(10) as u64;
            let seeds: Vec<u64> = (0..n).map(|i| a.seed.wrapping_add(i)).collect();
            run_synthetic_suite(&seeds, &cfg)?
        }
        Suite::Procurement => run_procurement(a.n.unwrap_or(240), a.seed, &cfg)?,
    };
    if let Some(p) = &a.csv {
        report.write_csv_file(p)?;
    }
    if let Some(p) = &a.json {
        report.write_json_file(p)?;
    }
    if a.csv.is_none() && a.json.is_none() {
        emit(&report.to_json(), None, out)?;
    }
    Ok(())
}

fn bench(a: BenchArgs, cfg: &SolverConfig, out: &mut dyn Write) -> Result<(), CliError> {
    if let Some(s) = a.sizes.iter().find(|s| !(2..=20).contains(*s)) {
        return Err(CliError::Invalid(format!("benchmark size {s} is outside [2, 20]")));
    }
    let rows = bench_scaling(&a.sizes, a.epsilon, a.seed, a.instances, cfg)?;
    emit(&to_json(&rows), a.json.as_deref(), out)
}

fn qbf(a: QbfArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let QbfSource { verify, exhaustive, random } = a.source;
    if let Some(path) = verify {
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))?;
        let f = parse_qdimacs(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
        let v = verify_reduction_detail(&f)?;
        let verdict = if v.equivalent() { "EQUIVALENT" } else { "NOT EQUIVALENT" };
        writeln!(out, "{verdict} qbf={} game={}", v.oracle, v.game)?;
        return if v.equivalent() { Ok(()) } else { Err(CliError::Failed("reduction mismatch".into())) };
    }
    let (label, formulas) = match (exhaustive, random) {
        (Some(k), _) => (format!("exhaustive k={k}"), exhaustive_family(k)?),
        (_, Some(n)) => (
            format!("random {}e{}a{}c", a.exists, a.forall, a.clauses),
            (0..n as u64).map(|i| random_qbf(a.seed.wrapping_add(i), a.exists, a.forall, a.clauses, a.width)).collect(),
        ),
        _ => unreachable!("clap requires one source"),
    };
    let (mut n_true, mut mismatches) = (0, 0);
    for f in &formulas {
        let v = verify_reduction_detail(f)?;
        n_true += usize::from(v.oracle);
        mismatches += usize::from(!v.equivalent());
    }
    let verdict = if mismatches == 0 { "EQUIVALENT" } else { "NOT EQUIVALENT" };
    writeln!(out, "{verdict} {label}: {} formulas verified, {n_true} true, {mismatches} mismatches", formulas.len())?;
    if mismatches == 0 {
        Ok(())
    } else {
        Err(CliError::Failed(format!("{mismatches} reduction mismatches")))
    }
}
