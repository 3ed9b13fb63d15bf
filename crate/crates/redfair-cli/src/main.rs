//! `redfair` command line: generate instances, solve them with the fair
//! solver or a baseline policy, query the brute-force oracle, and run
//! benchmark batches from JSON configs.
//!
//! Exit codes: 0 success, 2 invalid input, 3 infeasible instance,
//! 4 oracle enumeration cap exceeded.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use redfair::bench::{rows_to_csv, summary_to_csv};
use redfair::problem::Assignment;
use redfair::solver::SolveResult;
use redfair::{
    alpha_bound, brute_force_optimal_capped, derive_seed, network_to_instance, random_bipartite,
    random_redundant, random_transport_network, repeated_threshold, run_experiment,
    sample_cost_matrix, solve_fair, summarize, utilitarian_redundant, AlphaMode, CostEvaluator,
    ExperimentConfig, InitialPolicy, Policy, ProblemInstance,
};

#[derive(Parser)]
#[command(name = "redfair", version, about = "Fair redundant assignment under uncertain costs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random problem instance as JSON.
    Generate {
        #[command(subcommand)]
        generator: Generator,
    },
    /// Solve an instance JSON with a policy and print the result JSON.
    Solve(SolveArgs),
    /// Exhaustively search for the optimal redundant assignment.
    Oracle(OracleArgs),
    /// Run a benchmark batch from a JSON config, writing CSV and JSON rows.
    Benchmark(BenchmarkArgs),
}

#[derive(Subcommand)]
enum Generator {
    /// Fully connected bipartite instance with truncated-Gaussian edge costs.
    Bipartite(BipartiteArgs),
    /// Random transport network; edge costs become per-scenario shortest paths.
    Transport(TransportArgs),
}

#[derive(Args)]
struct BipartiteArgs {
    #[arg(long)]
    agents: usize,
    #[arg(long)]
    tasks: usize,
    #[arg(long, default_value_t = 15.0)]
    mean_lo: f64,
    #[arg(long, default_value_t = 20.0)]
    mean_hi: f64,
    #[arg(long, default_value_t = 5.0)]
    std_lo: f64,
    #[arg(long, default_value_t = 10.0)]
    std_hi: f64,
    /// Lower truncation point of every edge distribution.
    #[arg(long, default_value_t = 5.0)]
    truncation: f64,
    /// Deployment size stored in the instance (defaults to the task count).
    #[arg(long)]
    nd: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TransportArgs {
    #[arg(long, default_value_t = redfair::netgen::DEFAULT_NETWORK_NODES)]
    nodes: usize,
    #[arg(long)]
    agents: usize,
    #[arg(long)]
    tasks: usize,
    #[arg(long, default_value_t = 10.0)]
    mean_lo: f64,
    #[arg(long, default_value_t = 20.0)]
    mean_hi: f64,
    #[arg(long, default_value_t = 5.0)]
    std_lo: f64,
    #[arg(long, default_value_t = 10.0)]
    std_hi: f64,
    /// Probability of adding each non-tree edge.
    #[arg(long, default_value_t = redfair::netgen::DEFAULT_EXTRA_EDGE_DENSITY)]
    density: f64,
    /// Scenarios drawn to build the instance's empirical cost distributions.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long)]
    nd: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the generated network itself.
    #[arg(long)]
    network_out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// Problem instance JSON.
    instance: PathBuf,
    #[arg(long, default_value = "fair")]
    policy: Policy,
    /// Relaxation factor: `eq6` (log bound), `1`, or an explicit real.
    #[arg(long, default_value = "eq6")]
    alpha: AlphaMode,
    /// Deployment size; defaults to the instance's stored value.
    #[arg(long)]
    nd: Option<usize>,
    /// Scenario count for the frozen cost tensor.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "bottleneck")]
    initial: InitialPolicy,
    /// Use exact enumeration instead of sampling (discrete instances only).
    #[arg(long)]
    exact: bool,
    /// Round task costs to integers (guarantee-exact mode).
    #[arg(long)]
    integer_costs: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    instance: PathBuf,
    #[arg(long)]
    nd: Option<usize>,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "bottleneck")]
    initial: InitialPolicy,
    /// Cap on enumerated sets.
    #[arg(long, default_value_t = redfair::baselines::DEFAULT_ORACLE_CAP)]
    cap: u64,
    #[arg(long)]
    exact: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Experiment config JSON.
    config: PathBuf,
    /// Directory for rows.csv, rows.json, summary.csv, summary.json.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Serialize)]
struct SolveReport {
    policy: Policy,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    deployment: usize,
    samples: usize,
    seed: u64,
    initial_policy: InitialPolicy,
    initial_assignment: Assignment,
    assignment: Assignment,
    deployment_used: usize,
    task_costs_before: Vec<f64>,
    task_costs_after: Vec<f64>,
    max_cost_before: f64,
    max_cost_after: f64,
    mean_cost_before: f64,
    mean_cost_after: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    solve: Option<SolveResult>,
    wall_time_ms: f64,
}

enum CliError {
    Lib(redfair::Error),
    Io(std::io::Error),
    Json(serde_json::Error),
}

impl From<redfair::Error> for CliError {
    fn from(e: redfair::Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Json(e)
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Lib(e) => match e {
                redfair::Error::TooLarge(_) => 4,
                redfair::Error::InfeasibleInstance(_)
                | redfair::Error::UncoveredTask(_)
                | redfair::Error::InvalidAugmentation(_)
                | redfair::Error::Disconnected(_) => 3,
                redfair::Error::InvalidParameter(_) | redfair::Error::IncompleteInstance(_) => 2,
            },
            CliError::Io(_) | CliError::Json(_) => 2,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Lib(e) => e.to_string(),
            CliError::Io(e) => e.to_string(),
            CliError::Json(e) => e.to_string(),
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {}", e.message());
        std::process::exit(e.exit_code());
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate { generator } => generate(generator),
        Command::Solve(args) => solve(args),
        Command::Oracle(args) => oracle(args),
        Command::Benchmark(args) => benchmark(args),
    }
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => fs::write(path, json + "\n")?,
        None => println!("{json}"),
    }
    Ok(())
}

fn generate(generator: Generator) -> Result<(), CliError> {
    match generator {
        Generator::Bipartite(a) => {
            let mut instance = random_bipartite(
                a.agents,
                a.tasks,
                (a.mean_lo, a.mean_hi),
                (a.std_lo, a.std_hi),
                a.truncation,
                a.seed,
            )?;
            if let Some(nd) = a.nd {
                instance = instance.with_deployment(nd)?;
            }
            emit(&instance, a.out.as_deref())
        }
        Generator::Transport(a) => {
            let net = random_transport_network(
                a.nodes,
                a.agents,
                a.tasks,
                (a.mean_lo, a.mean_hi),
                (a.std_lo, a.std_hi),
                a.density,
                a.seed,
            )?;
            if let Some(path) = &a.network_out {
                emit(&net, Some(path))?;
            }
            let (mut instance, _) = network_to_instance(&net, a.samples, derive_seed(a.seed, 1))?;
            if let Some(nd) = a.nd {
                instance = instance.with_deployment(nd)?;
            }
            emit(&instance, a.out.as_deref())
        }
    }
}

fn load_instance(path: &Path) -> Result<ProblemInstance, CliError> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn build_evaluator(
    instance: &ProblemInstance,
    initial_policy: InitialPolicy,
    samples: usize,
    seed: u64,
    exact: bool,
) -> Result<(Assignment, CostEvaluator), CliError> {
    let initial = initial_policy.build(&instance.mean_costs())?;
    let ev = if exact {
        CostEvaluator::exact_discrete(instance, initial.clone())?
    } else {
        let matrix = sample_cost_matrix(instance, samples, seed)?;
        CostEvaluator::from_samples(instance, matrix, initial.clone())?
    };
    Ok((initial, ev))
}

fn solve(args: SolveArgs) -> Result<(), CliError> {
    let instance = load_instance(&args.instance)?;
    let nd = args.nd.unwrap_or(instance.deployment());
    let (initial, mut ev) =
        build_evaluator(&instance, args.initial, args.samples, args.seed, args.exact)?;
    if args.integer_costs {
        ev = ev.with_integer_costs();
    }

    let costs_before = ev.task_costs(&Assignment::new())?;
    let started = Instant::now();
    let (assignment, alpha, solve_result) = match args.policy {
        Policy::Fair => {
            let alpha = args.alpha.resolve(&ev)?;
            let res = solve_fair(&ev, nd, alpha)?;
            (res.assignment.clone(), Some(alpha), Some(res))
        }
        Policy::FairAlpha => {
            let alpha = alpha_bound(&ev)?.value;
            let res = solve_fair(&ev, nd, alpha)?;
            (res.assignment.clone(), Some(alpha), Some(res))
        }
        Policy::Utilitarian => (utilitarian_redundant(&ev, nd)?, None, None),
        Policy::Random => (
            random_redundant(&instance, &initial, nd, derive_seed(args.seed, 2))?,
            None,
            None,
        ),
        Policy::RepeatThreshold => (
            repeated_threshold(&instance.mean_costs(), &initial, nd)?,
            None,
            None,
        ),
        Policy::Oracle => {
            let res =
                brute_force_optimal_capped(&ev, nd, redfair::baselines::DEFAULT_ORACLE_CAP)?;
            (res.assignment, None, None)
        }
    };
    let wall_time_ms = started.elapsed().as_secs_f64() * 1000.0;

    let costs_after = ev.task_costs(&assignment)?;
    let report = SolveReport {
        policy: args.policy,
        alpha,
        deployment: nd,
        samples: args.samples,
        seed: args.seed,
        initial_policy: args.initial,
        initial_assignment: initial,
        deployment_used: assignment.len() + instance.tasks(),
        assignment,
        max_cost_before: fold_max(&costs_before),
        max_cost_after: fold_max(&costs_after),
        mean_cost_before: mean(&costs_before),
        mean_cost_after: mean(&costs_after),
        task_costs_before: costs_before,
        task_costs_after: costs_after,
        solve: solve_result,
        wall_time_ms,
    };
    emit(&report, args.out.as_deref())
}

fn oracle(args: OracleArgs) -> Result<(), CliError> {
    let instance = load_instance(&args.instance)?;
    let nd = args.nd.unwrap_or(instance.deployment());
    let (_, ev) =
        build_evaluator(&instance, args.initial, args.samples, args.seed, args.exact)?;
    let result = brute_force_optimal_capped(&ev, nd, args.cap)?;
    emit(&result, args.out.as_deref())
}

fn benchmark(args: BenchmarkArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.config)?;
    let config: ExperimentConfig = serde_json::from_str(&text)?;
    let rows = run_experiment(&config)?;
    let summary = summarize(&rows)?;

    fs::create_dir_all(&args.out)?;
    let rows_csv = args.out.join("rows.csv");
    let rows_json = args.out.join("rows.json");
    let summary_csv = args.out.join("summary.csv");
    let summary_json = args.out.join("summary.json");
    fs::write(&rows_csv, rows_to_csv(&rows))?;
    fs::write(&rows_json, serde_json::to_string_pretty(&rows)? + "\n")?;
    fs::write(&summary_csv, summary_to_csv(&summary))?;
    fs::write(&summary_json, serde_json::to_string_pretty(&summary)? + "\n")?;

    println!(
        "{} rows over {} trials -> {}, {}, {}, {}",
        rows.len(),
        config.trials,
        rows_csv.display(),
        rows_json.display(),
        summary_csv.display(),
        summary_json.display()
    );
    Ok(())
}

fn fold_max(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}
