//! `pcn` — predictive-coding experiment runner.
//!
//! Each subcommand reads a TOML experiment file (presets live in
//! `configs/`), runs one experiment family, and writes deterministic CSV
//! artifacts. Exit codes: 0 on success, 2 for configuration or usage
//! errors, 3 when a training cell diverged, 4 when the operation-count
//! audit found a mismatch, 1 for anything else.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pcn_cli::commands::{bench, calibrate, classify, efficiency, generate};
use pcn_cli::config::{load_config, EngineChoice, ExperimentKind, Overrides};
use pcn_cli::CliError;

#[derive(Parser)]
#[command(
    name = "pcn",
    version,
    about = "Predictive-coding network experiment runner",
    after_help = "Exit codes: 0 success, 2 config/usage error, 3 divergence, 4 audit failure, \
                  1 other failure.\nDatasets resolve from [dataset] dir, then $PCN_DATA_DIR, \
                  then data/."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an algorithm x seed accuracy grid and save checkpoints
    Classify(RunArgs),
    /// Trace generative energy against inference iterations
    Generate(RunArgs),
    /// Training-loss-versus-SMM efficiency curves at a shared budget
    Efficiency(RunArgs),
    /// Operation-count audit (bench-smm) or wall-clock sweep (bench-wallclock)
    Bench(RunArgs),
    /// Corruption-shift calibration study over saved checkpoints
    Calibrate(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration file (TOML)
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Override the configured artifact directory
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Run a single seed instead of the configured list
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Override the execution engine
    #[arg(long, value_enum, value_name = "KIND")]
    engine: Option<EngineArg>,
    /// Worker threads for the parallel engine
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// Validate the config and print the plan without computing anything
    #[arg(long)]
    dry_run: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EngineArg {
    Serial,
    Parallel,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> pcn_cli::Result<()> {
    let (args, allowed): (&RunArgs, &[ExperimentKind]) = match &cli.command {
        Command::Classify(a) => (a, &[ExperimentKind::Classify]),
        Command::Generate(a) => (a, &[ExperimentKind::Generate]),
        Command::Efficiency(a) => (a, &[ExperimentKind::Efficiency]),
        Command::Bench(a) => (a, &[ExperimentKind::BenchSmm, ExperimentKind::BenchWallclock]),
        Command::Calibrate(a) => (a, &[ExperimentKind::Calibrate]),
    };
    let overrides = Overrides {
        out: args.out.clone(),
        seed: args.seed,
        engine: args.engine.map(|e| match e {
            EngineArg::Serial => EngineChoice::Serial,
            EngineArg::Parallel => EngineChoice::Parallel,
        }),
        workers: args.workers,
        dry_run: args.dry_run,
    };
    let rc = load_config(&args.config, &overrides)?;
    if !allowed.contains(&rc.cfg.kind) {
        return Err(CliError::Config(format!(
            "config kind {:?} does not belong to this subcommand (expected {})",
            rc.cfg.kind.name(),
            allowed.iter().map(|k| k.name()).collect::<Vec<_>>().join(" or ")
        )));
    }
    match rc.cfg.kind {
        ExperimentKind::Classify => {
            classify::cmd_classify(&rc)?;
        }
        ExperimentKind::Generate => {
            generate::cmd_generate(&rc)?;
        }
        ExperimentKind::Efficiency => {
            efficiency::cmd_efficiency(&rc)?;
        }
        ExperimentKind::BenchSmm | ExperimentKind::BenchWallclock => {
            bench::cmd_bench(&rc)?;
        }
        ExperimentKind::Calibrate => {
            calibrate::cmd_calibrate(&rc)?;
        }
    }
    Ok(())
}
