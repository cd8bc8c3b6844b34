//! `rwrp`: runs experiments from a config file and writes CSV and
//! JSON-lines tables.
//!
//! Exit status: 0 success, 1 usage error, 2 self-test failure, 3 numerical
//! non-convergence.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::CmdError;
use config::ExperimentConfig;
use output::Sink;

#[derive(Parser, Debug)]
#[command(
    name = "rwrp",
    version,
    about = "Random walks in random potentials: rates, Monte Carlo and Green functions"
)]
struct Cli {
    /// Sectioned TOML config; defaults apply to anything it omits.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed, overriding `run.seed`.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory, overriding `run.out`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads, overriding `run.workers`.
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// f table, rate integral, splittings, scales and optimal speed.
    Theory,
    /// Escape probabilities by quadrature and Monte Carlo.
    Qd,
    /// Annealed decay sweeps by Feynman-Kac Monte Carlo.
    Mc,
    /// Averaged Green function decay and the solver versus series check.
    Green,
    /// Exact enumeration brackets for short paths.
    Oracle,
    /// The acceptance battery.
    Selftest,
}

fn run(cli: Cli) -> Result<(), CmdError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.run.out = out;
    }
    if let Some(w) = cli.workers {
        cfg.run.workers = w;
    }
    if cfg.run.d < 3 {
        return Err(CmdError::Usage("run.d must be at least 3".into()));
    }
    if cfg.run.workers > 0 {
        rwrp_core::par::set_workers(cfg.run.workers);
    }
    let sink = Sink::new(&cfg.run.out, cfg.hash(), cfg.run.seed)?;
    match cli.command {
        Command::Theory => commands::theory(&cfg, &sink),
        Command::Qd => commands::qd(&cfg, &sink),
        Command::Mc => commands::mc(&cfg, &sink),
        Command::Green => commands::green(&cfg, &sink),
        Command::Oracle => commands::oracle(&cfg, &sink),
        Command::Selftest => commands::selftest(&cfg, &sink),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rwrp: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
