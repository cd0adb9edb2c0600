//! Command-line front-end for the `ststore` simulator.
//!
//! Subcommands `dmt`, `outage`, `simulate` and `repair` write a table (CSV or
//! JSON) plus a JSON summary or SVG chart into `--out`; `selftest` runs a
//! short invariant suite. Exit codes: 0 success, 2 configuration error,
//! 3 runtime error, 4 statistically insufficient result.

pub mod commands;
pub mod config;
pub mod output;
pub mod selftest;

use std::ffi::OsString;
use std::path::Path;

use clap::{Parser, Subcommand};

use config::{CommonArgs, DmtArgs, OutageArgs, RepairArgs, SimulateArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] ststore::Error),
    #[error("statistically insufficient: {0}")]
    Statistical(String),
    #[error("self-test failed")]
    SelfTest,
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } | CliError::Core(_) | CliError::SelfTest => 3,
            CliError::Statistical(_) => 4,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "ststore", version, about = "Space-time storage code simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Analytic DMT curves of the optimal MAC, pair and TDMA schemes.
    Dmt {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        args: DmtArgs,
    },
    /// Monte Carlo outage probability and diversity slope.
    Outage {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        args: OutageArgs,
    },
    /// Decoder-level session error sweep.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        args: SimulateArgs,
    },
    /// End-to-end node repair over the fading channel.
    Repair {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        args: RepairArgs,
    },
    /// Algebra invariants, decoder oracle equivalence and DMT curve checks.
    Selftest {
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {workers} workers: {e}")))
}

pub fn execute(cli: &Cli) -> Result<commands::Report, CliError> {
    match &cli.command {
        Command::Dmt { common, args } => {
            let (c, cfg) = config::resolve_dmt(args, common)?;
            commands::cmd_dmt(&c, &cfg)
        }
        Command::Outage { common, args } => {
            let (c, cfg) = config::resolve_outage(args, common)?;
            pool(c.workers)?.install(|| commands::cmd_outage(&c, &cfg))
        }
        Command::Simulate { common, args } => {
            let (c, cfg) = config::resolve_simulate(args, common)?;
            pool(c.workers)?.install(|| commands::cmd_simulate(&c, &cfg))
        }
        Command::Repair { common, args } => {
            let (c, cfg) = config::resolve_repair(args, common)?;
            pool(c.workers)?.install(|| commands::cmd_repair(&c, &cfg))
        }
        Command::Selftest { workers } => {
            let n = workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            if pool(n.max(1))?.install(selftest::run_all) {
                Ok(commands::Report {
                    files: vec![],
                    summary: serde_json::Value::Null,
                })
            } else {
                Err(CliError::SelfTest)
            }
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(report) => {
            for f in &report.files {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
