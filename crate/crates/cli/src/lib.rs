//! Configuration loading, subcommand dispatch and report emission.

#![allow(clippy::type_complexity)]

pub mod commands;
pub mod config;
pub mod output;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

/// Input errors exit with 1, failed hypotheses and bound checks with 2.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Library(#[from] ergobound::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use ergobound::Error as E;
        match self {
            CliError::Library(
                E::NotStable { .. }
                | E::Singular { .. }
                | E::Conditioning { .. }
                | E::GrowthViolation { .. }
                | E::PackagedVerification { .. }
                | E::BlowUp { .. }
                | E::NonFiniteDrift { .. },
            ) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ergobound", version, about = "Transition densities and ergodicity constants for semilinear SDEs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `mc.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides `output.directory`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Also write a gnuplot script for the CSV tables.
    #[arg(long, global = true)]
    pub emit_plots: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Strong Feller, Hilbert–Schmidt, growth and symmetry diagnostics.
    Check,
    /// Bridge samplers against the conditional Gaussian law.
    BridgeValidate,
    /// Transition density at one pair of points; vectors are comma-separated.
    Density {
        #[arg(allow_hyphen_values = true)]
        x: String,
        #[arg(allow_hyphen_values = true)]
        y: String,
    },
    /// Lower-bound constants, packaged bound and δ.
    LowerBound,
    /// Full constant report: δ, Meyn–Tweedie constants, rates, gaps.
    Bounds,
    /// Plain trajectory simulation.
    Simulate,
    /// Bounds plus the empirical total-variation experiment.
    ErgodicityReport,
    /// Invariant-law continuity in a drift parameter.
    Sweep,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::BridgeValidate => "bridge-validate",
            Command::Density { .. } => "density",
            Command::LowerBound => "lower-bound",
            Command::Bounds => "bounds",
            Command::Simulate => "simulate",
            Command::ErgodicityReport => "ergodicity-report",
            Command::Sweep => "sweep",
        }
    }
}

/// Parses arguments, runs the subcommand and writes its outputs; returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(report) => {
            let pass = report.pass;
            println!("{}", report.summary());
            if pass {
                0
            } else {
                2
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<report::Report, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Usage("--config <path> is required".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut cfg = config::parse_config(&text)?;
    if let Some(s) = cli.seed {
        cfg.mc.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output.directory = o.display().to_string();
    }
    let (report, tables) = commands::dispatch(&cli.command, &cfg)?;
    output::write_outputs(&cfg, &text, &report, &tables, cli.emit_plots)?;
    Ok(report)
}
