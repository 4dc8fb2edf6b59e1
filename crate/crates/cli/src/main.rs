use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use adaptive_benders::harness::metrics::{counts_match, replay};
use adaptive_benders::harness::{report_dir, run_experiment, ExperimentOptions, SolveLog};
use adaptive_benders::instance::{generate_instance, load_instance, to_native_string, GenerationParams};
use adaptive_benders::master::{check_incumbent_feasible, solve_compact, DEFAULT_COMPACT_CAP};
use adaptive_benders::{solve, Error, RunConfig, SolveStatus};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "adaptive-benders", version, about = "Survivable network design by Branch-and-Benders-cut")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SolveOptions {
    /// Scenario selection identifier, e.g. `Standard` or `ML-0.5P-20S-5R`.
    #[arg(long, default_value = "Standard")]
    config: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Relative optimality gap.
    #[arg(long, default_value_t = 1e-6)]
    gap: f64,
    /// Learning rate of the cut predictor.
    #[arg(long, default_value_t = 0.075)]
    alpha: f64,
    /// L2 regularization of the cut predictor.
    #[arg(long, default_value_t = 0.02)]
    lambda: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and print the run summary as JSON.
    Solve {
        instance: PathBuf,
        #[command(flatten)]
        options: SolveOptions,
        /// Write the event log here.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Merge BFS subgraphs of source networks into a new instance.
    Generate {
        #[arg(long, num_args = 1.., required = true)]
        sources: Vec<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        subgraphs: usize,
        #[arg(long, default_value_t = 0.5)]
        proportion: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-check the decomposition against the compact formulation.
    Verify {
        instance: PathBuf,
        #[command(flatten)]
        options: SolveOptions,
        /// Largest compact formulation (variables plus rows) to attempt.
        #[arg(long, default_value_t = DEFAULT_COMPACT_CAP)]
        size_cap: usize,
    },
    /// Compute all metric tables from a directory of logs.
    Report {
        #[arg(long)]
        logs: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recompute a log's summary from its events.
    Replay { log: PathBuf },
    /// Run every configuration on every instance and write logs plus report.
    Experiment {
        #[arg(long, num_args = 1.., required = true)]
        instances: Vec<PathBuf>,
        #[arg(long, num_args = 1.., required = true)]
        configs: Vec<String>,
        #[arg(long, num_args = 1.., default_values_t = [0u64])]
        seeds: Vec<u64>,
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Input(String),
    Solver(String),
    TimeLimit,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::TimeLimit => Failure::TimeLimit,
            Error::Numerical(_) | Error::SolverFailure(_) | Error::Shape(_) | Error::SizeGuardExceeded { .. } => {
                Failure::Solver(e.to_string())
            }
            _ => Failure::Input(e.to_string()),
        }
    }
}

fn seconds(s: Option<f64>) -> Result<Option<Duration>, Failure> {
    s.map(|s| Duration::try_from_secs_f64(s).map_err(|_| Failure::Input(format!("invalid time limit {s}"))))
        .transpose()
}

fn run_config(options: &SolveOptions) -> Result<RunConfig, Failure> {
    let mut config = RunConfig::from_id(&options.config)?;
    config.seed = options.seed;
    config.time_limit = seconds(options.time_limit)?;
    config.gap_tolerance = options.gap;
    config.learning_rate = options.alpha;
    config.regularization = options.lambda;
    Ok(config)
}

fn print_json(value: &impl serde::Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Input(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn solve_command(path: &Path, options: &SolveOptions, log: Option<&Path>) -> Result<(), Failure> {
    let instance = load_instance(path)?;
    let config = run_config(options)?;
    let result = solve(&instance, &config)?;
    if let Some(p) = log {
        result.log.save(p)?;
    }
    if let Some(summary) = result.log.summary() {
        print_json(summary)?;
    }
    match result.status {
        SolveStatus::TimeLimit => Err(Failure::TimeLimit),
        _ => Ok(()),
    }
}

fn verify_command(path: &Path, options: &SolveOptions, size_cap: usize) -> Result<(), Failure> {
    let instance = load_instance(path)?;
    let config = run_config(options)?;
    let compact = solve_compact(&instance, config.time_limit, size_cap)?;
    let benders = solve(&instance, &config)?;
    if compact.status == SolveStatus::TimeLimit || benders.status == SolveStatus::TimeLimit {
        return Err(Failure::TimeLimit);
    }
    println!("compact:    {:?} {:?}", compact.status, compact.objective);
    println!("decomposed: {:?} {:?}", benders.status, benders.objective);
    if compact.status != benders.status {
        return Err(Failure::Solver("statuses differ".into()));
    }
    if let (Some(a), Some(b)) = (compact.objective, benders.objective) {
        if (a - b).abs() > 1e-6 * (1.0 + a.abs()) {
            return Err(Failure::Solver(format!("objectives differ: {a} vs {b}")));
        }
    }
    if let Some(design) = &benders.design {
        if !check_incumbent_feasible(&instance, design, &config.lp)? {
            return Err(Failure::Solver("decomposed design fails a scenario".into()));
        }
    }
    println!("ok");
    Ok(())
}

fn replay_command(path: &Path) -> Result<(), Failure> {
    let log = SolveLog::load(path)?;
    log.check_timestamps()?;
    let recomputed = replay(&log)?;
    print_json(&recomputed)?;
    match log.summary() {
        Some(stored) if !counts_match(stored, &recomputed) => {
            Err(Failure::Input("stored summary disagrees with the events".into()))
        }
        Some(_) => Ok(()),
        None => {
            log::warn!("log has no final summary; it was probably cut short");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve { instance, options, log } => solve_command(&instance, &options, log.as_deref()),
        Command::Generate {
            sources,
            seed,
            subgraphs,
            proportion,
            out,
        } => {
            let sources = sources.iter().map(|p| load_instance(p)).collect::<Result<Vec<_>, _>>()?;
            let params = GenerationParams {
                count_subgraphs: subgraphs,
                proportion,
            };
            let generated = generate_instance(&sources, &params, seed)?;
            fs::write(&out, to_native_string(&generated)).map_err(Error::from)?;
            eprintln!(
                "{}: {} nodes, {} edges, {} demands, {} scenarios",
                out.display(),
                generated.nodes.len(),
                generated.edges.len(),
                generated.demands.len(),
                generated.scenarios.len()
            );
            Ok(())
        }
        Command::Verify {
            instance,
            options,
            size_cap,
        } => verify_command(&instance, &options, size_cap),
        Command::Report { logs, out } => {
            let report = report_dir(&logs, &out)?;
            eprintln!("{} runs, {} configurations -> {}", report.runs.len(), report.configs.len(), out.display());
            Ok(())
        }
        Command::Replay { log } => replay_command(&log),
        Command::Experiment {
            instances,
            configs,
            seeds,
            time_limit,
            jobs,
            out,
        } => {
            let options = ExperimentOptions {
                seeds,
                time_limit: seconds(time_limit)?,
                jobs,
                ..Default::default()
            };
            let r = run_experiment(&instances, &configs, &options, &out)?;
            for f in &r.failures {
                eprintln!("failed: {} {} seed {}: {}", f.instance, f.config, f.seed, f.error);
            }
            if r.report.is_none() {
                return Err(Failure::Solver("every run failed".into()));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(m)) => {
            eprintln!("solver failure: {m}");
            ExitCode::from(3)
        }
        Err(Failure::TimeLimit) => {
            eprintln!("time limit reached");
            ExitCode::from(4)
        }
    }
}
