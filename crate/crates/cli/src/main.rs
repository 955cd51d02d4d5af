use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;

/// Train, evaluate and inspect throwing policies for an underactuated
/// material handler.
#[derive(Debug, Parser)]
#[command(name = "throwsim", version)]
struct Cli {
    /// Run configuration (TOML). Built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `seed` from the configuration.
    #[arg(long, global = true, env = "THROW_SEED")]
    seed: Option<u64>,
    /// Worker threads for environment stepping (all cores by default).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Overrides `out` from the configuration.
    #[arg(long, global = true, env = "THROW_OUT")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a policy with PPO; writes checkpoint.bin, train_log.csv and the
    /// resolved configuration.
    Train,
    /// Sweep target distances with a trained policy; writes records.csv,
    /// summary.csv and scatter.csv.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Fit passive-joint friction or the gripper delay from a log.
    Identify {
        #[arg(value_enum)]
        kind: IdentifyKind,
        #[arg(long)]
        log: PathBuf,
    },
    /// Run one deterministic episode and write its full trace.
    Rollout {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Trace file; `<out>/trace.csv` by default.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum IdentifyKind {
    Friction,
    Delay,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
    }
}
