//! Thin command-line front end: every subcommand maps 1:1 onto an
//! experiment in `clarq::experiments`, and every flag is an override of
//! the corresponding config key. All logic lives in the library.
//!
//! Exit codes: 0 = success, 1 = configuration or runtime error,
//! 2 = the run finished but every result row was infeasible.

use clap::{Parser, Subcommand};
use clarq::config::{ExperimentConfig, ExperimentKind};
use clarq::experiments::{run_experiment, ExitOutcome};
use clarq::ClarqError;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "clarq",
    version,
    about = "Optimal dynamic-ARQ blocklength allocation for closed-loop URLLC frames",
    after_help = "Flags override keys of the TOML config (see `ExperimentConfig`); \
                  the subcommand always selects the experiment, even when a config \
                  file names a different one."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment config to start from (defaults per experiment).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed for all pseudo-random draws.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Directory for result files (created if missing).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
    /// Scenario preset name (`a` or `b`).
    #[arg(long, global = true, value_name = "NAME")]
    scenario: Option<String>,
}

#[derive(Subcommand)]
#[command(rename_all = "snake_case")]
enum Command {
    /// Solve the optimal slot-allocation policy and export its tables.
    Policy,
    /// Sweep the frame budget and tabulate optimal-schedule statistics.
    SweepNmax,
    /// Compare the optimal policy against one-shot and greedy baselines.
    Benchmark,
    /// Map feasibility and loop error over an SNR × packet-size grid.
    SensitivityGrid,
    /// Monte Carlo campaign over a block-fading channel model.
    FadingCampaign,
    /// Measure how lookup-table grid pitch degrades the fading campaign.
    LutResolution,
    /// Energy-constrained power-controlled schedules vs. plain schedules.
    ApcCase,
    /// Discrete-event protocol simulation of the optimal policy.
    Simulate,
}

impl Command {
    fn kind(&self) -> ExperimentKind {
        match self {
            Command::Policy => ExperimentKind::Policy,
            Command::SweepNmax => ExperimentKind::SweepNmax,
            Command::Benchmark => ExperimentKind::Benchmark,
            Command::SensitivityGrid => ExperimentKind::SensitivityGrid,
            Command::FadingCampaign => ExperimentKind::FadingCampaign,
            Command::LutResolution => ExperimentKind::LutResolution,
            Command::ApcCase => ExperimentKind::ApcCase,
            Command::Simulate => ExperimentKind::Simulate,
        }
    }
}

fn execute(cli: Cli) -> clarq::Result<ExitOutcome> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::new(cli.command.kind()),
    };
    cfg.experiment = cli.command.kind();
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.out = Some(out);
    }
    if let Some(workers) = cli.workers {
        cfg.workers = Some(workers);
    }
    if let Some(name) = cli.scenario {
        cfg.scenario.preset = Some(name);
    }
    if let Some(workers) = cfg.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| ClarqError::Config(format!("worker pool: {e}")))?;
    }

    let arts = run_experiment(&cfg)?;
    emit(format_args!("{}: {}\n", cfg.experiment.label(), arts.summary));
    for file in &arts.files {
        emit(format_args!("  wrote {}\n", file.display()));
    }
    Ok(arts.outcome)
}

/// Print to stdout, exiting quietly when the reader has gone away
/// (`clarq policy | head -1` must not panic): by then the experiment has
/// already run and written its files, so a closed pipe is not an error.
fn emit(text: std::fmt::Arguments) {
    use std::io::Write;
    if let Err(e) = std::io::stdout().write_fmt(text) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: cannot write to stdout: {e}");
        std::process::exit(1);
    }
}

fn main() {
    // Usage mistakes are configuration errors (exit 1); clap's default exit
    // code for them (2) is reserved here for infeasible-only runs.
    let cli = Cli::try_parse().unwrap_or_else(|e| {
        let code = if e.use_stderr() { 1 } else { 0 };
        let _ = e.print();
        std::process::exit(code);
    });
    let code = match execute(cli) {
        Ok(ExitOutcome::Success) => 0,
        Ok(ExitOutcome::InfeasibleOnly) => {
            eprintln!("note: every result row was infeasible");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                ClarqError::Infeasible(_) => 2,
                _ => 1,
            }
        }
    };
    std::process::exit(code);
}
