//! Front end for the `sep2m` binary: argument definitions, matrix file I/O
//! and report rendering. `main.rs` only parses arguments and calls [`run`].

pub mod commands;
pub mod format;
pub mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const EXIT_OK: i32 = 0;
/// `check`: not certified (inconclusive). `ppt`: negative partial transpose.
/// `witness`: refuted.
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
/// `witness`: some levels accepted, none refuted, at least one undecided.
pub const EXIT_MIXED: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] sep2m_core::Error),
}

#[derive(Debug, Parser)]
#[command(name = "sep2m", version, about = "Separability certificates for qubit-qudit states")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search for a separability certificate at levels 1..=N.
    Check(CheckArgs),
    /// Smallest eigenvalue of the partial transpose.
    Ppt(PptArgs),
    /// Test a map (P, Q, R) against the positivity hierarchy and a grid.
    Witness(WitnessArgs),
    /// Write a state file.
    Gen(GenArgs),
    /// Print trace(rho sigma) for a state and a witness.
    Pair(PairArgs),
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub input: PathBuf,
    #[arg(long, default_value_t = 6)]
    pub levels: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol_residual: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub tol_psd: f64,
    #[arg(long, default_value_t = 50_000)]
    pub max_iter: usize,
    /// Worker threads for independent levels; the verdict does not depend on it.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long)]
    pub json: bool,
    #[arg(long, value_name = "PATH")]
    pub emit_certificate: Option<PathBuf>,
    /// When not certified, write the candidate witness read off the last level.
    #[arg(long, value_name = "PATH")]
    pub emit_witness: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PptArgs {
    pub input: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct WitnessArgs {
    pub input: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub levels: usize,
    /// Grid resolution as `radial,angular`.
    #[arg(long, value_name = "U,THETA", default_value = "64,128")]
    pub grid: String,
    #[arg(long, default_value_t = 50_000)]
    pub max_iter: usize,
    #[arg(long)]
    pub json: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Bell,
    Werner,
    Product,
    MaxMixed,
    RandomSeparable,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: GenKind,
    /// Werner weight in [0, 1].
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    /// Product factors as `re,im;re,im;...`.
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub y: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of product terms; drawn from 1..=8 with the seed when absent.
    #[arg(long)]
    pub terms: Option<usize>,
    /// Weight of the maximally mixed component.
    #[arg(long)]
    pub mix: Option<f64>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PairArgs {
    pub state: PathBuf,
    pub witness: PathBuf,
    #[arg(long)]
    pub json: bool,
}

/// Runs one command and returns the process exit code. Diagnostics go to
/// standard error.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Check(a) => commands::check(&a),
        Command::Ppt(a) => commands::ppt(&a),
        Command::Witness(a) => commands::witness(&a),
        Command::Gen(a) => commands::gen(&a),
        Command::Pair(a) => commands::pair(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("sep2m: {e}");
            EXIT_INPUT
        }
    }
}

pub fn init_logging() {
    let level = match std::env::var("SEP2M_LOG").as_deref() {
        Ok("quiet") => log::LevelFilter::Off,
        Ok("info") => log::LevelFilter::Info,
        Ok("trace") => log::LevelFilter::Trace,
        _ => log::LevelFilter::Warn,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .target(env_logger::Target::Stderr)
        .format_timestamp(None)
        .init();
}
