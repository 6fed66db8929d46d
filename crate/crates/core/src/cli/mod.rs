//! Command-line front end: `run`, `sweep`, `bounds` and `figdata`.

mod commands;
mod settings;
mod sweep;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use settings::{apply_config_file, resolve_config};
pub use sweep::{sweep_rows, SweepRow, SWEEP_HEADER};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;
pub const EXIT_DECODE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "coded-shuffle", version, about = "Coded wireless MapReduce shuffle simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one configuration end to end.
    Run(RunArgs),
    /// Grid over users and storage fractions, one CSV row per point.
    Sweep(SweepArgs),
    /// Closed-form loads and lower bounds.
    Bounds(BoundsArgs),
    /// Emit the data series behind the load and concentration figures.
    Figdata(FigArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct SystemArgs {
    #[arg(long)]
    pub users: Option<usize>,
    #[arg(long)]
    pub files: Option<usize>,
    /// Storage fraction, `p/q` or decimal.
    #[arg(long)]
    pub mu: Option<String>,
    #[arg(long = "value-bits")]
    pub value_bits: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// centralized | decentralized
    #[arg(long)]
    pub mode: Option<String>,
    /// mds | random | forward
    #[arg(long)]
    pub downlink: Option<String>,
    /// coded | uncoded
    #[arg(long)]
    pub baseline: Option<String>,
    /// key=value file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// JSON-lines trace of every uplink message and downlink block.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Write the run record as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Comma-separated user counts.
    #[arg(long, default_value = "6")]
    pub users: String,
    /// Comma-separated storage fractions, or `grid` for every t/K.
    #[arg(long, default_value = "grid")]
    pub mu: String,
    /// Comma-separated placement modes.
    #[arg(long, default_value = "centralized")]
    pub mode: String,
    /// Comma-separated baselines.
    #[arg(long, default_value = "coded")]
    pub baseline: String,
    #[arg(long, default_value = "mds")]
    pub downlink: String,
    /// Fixed file count; by default the smallest valid one (centralized)
    /// or 2000 (decentralized).
    #[arg(long)]
    pub files: Option<usize>,
    /// Bits per value; by default 8·lcm(⌊μK⌋, ⌈μK⌉).
    #[arg(long = "value-bits")]
    pub value_bits: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Formula rows only.
    #[arg(long)]
    pub analytic: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub users: Option<usize>,
    #[arg(long)]
    pub mu: Option<String>,
    /// Replication counts `a^0,a^1,…,a^K`, comma-separated.
    #[arg(long)]
    pub histogram: Option<String>,
    /// Placement dump to take the histogram from.
    #[arg(long)]
    pub placement: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FigArgs {
    /// fig2 | fig5 | fig6 | all
    #[arg(long, default_value = "all")]
    pub which: String,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Parses `args` (program name first) and runs the command; returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Run(a) => commands::run(a, out),
        Command::Sweep(a) => commands::sweep(a, out),
        Command::Bounds(a) => commands::bounds(a, out),
        Command::Figdata(a) => commands::figdata(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

/// Message plus exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.to_string(),
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        Self::config(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::config(format!("i/o: {e}"))
    }
}
