//! `triplebin`: rate regions, exact secrecy audits, Monte-Carlo simulation and
//! relay wrap tables from the command line.

mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use triplebin_core::{Category, Error, Result};

pub const WORKERS_ENV: &str = "TRIPLEBIN_WORKERS";

#[derive(Debug, Parser)]
#[command(
    name = "triplebin",
    version,
    about = "Triple-binning PNC secrecy toolkit"
)]
pub struct Cli {
    /// JSON file with the command's parameters; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed for simulations (default 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Corner points and convex-hull samples of nominal rate regions.
    Rates(RatesArgs),
    /// Exact equivocation and leakage of a bin layout.
    Audit(AuditArgs),
    /// Monte-Carlo run of the two-cycle relay link.
    Simulate(SimulateArgs),
    /// The relay's sum-to-PNC-symbol table with ambiguity sets.
    DumpWrap(DumpWrapArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// BPSK against M-PAM, M in {4, ..., 64}.
    Fig4,
    /// M_A-PAM against 64-PAM, M_A in {2, ..., 256}.
    Fig5,
    /// 4-QAM against M-QAM, M in {16, 64, 256}.
    Fig6,
}

#[derive(Debug, Args)]
pub struct RatesArgs {
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    /// Node A orders, replacing the family's list.
    #[arg(long, value_delimiter = ',')]
    pub ma: Vec<u32>,
    /// Node B orders, replacing the family's list.
    #[arg(long, value_delimiter = ',')]
    pub mb: Vec<u32>,
    /// Points per hull edge.
    #[arg(long)]
    pub hull_samples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[arg(long)]
    pub ma: Option<u32>,
    /// One order, or several for a leakage sweep.
    #[arg(long, value_delimiter = ',')]
    pub mb: Vec<u32>,
    #[arg(long)]
    pub ka: Option<u32>,
    #[arg(long)]
    pub kb: Option<u32>,
    /// Slot window length; repeatable.
    #[arg(long, value_delimiter = ',')]
    pub window: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub ma: Option<u32>,
    #[arg(long)]
    pub mb: Option<u32>,
    #[arg(long)]
    pub ka: Option<u32>,
    #[arg(long)]
    pub kb: Option<u32>,
    #[arg(long, value_enum)]
    pub modulation: Option<ModulationArg>,
    /// Noise variance; several values run a sweep.
    #[arg(long, value_delimiter = ',')]
    pub sigma2: Vec<f64>,
    #[arg(long, value_enum)]
    pub fading: Option<FadingArg>,
    /// Rician K factor (linear).
    #[arg(long)]
    pub k_factor: Option<f64>,
    /// Nakagami shape parameter.
    #[arg(long)]
    pub nakagami_m: Option<f64>,
    /// Slots per frame.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub frames: Option<usize>,
    /// `stream=code` with stream in {common, secret, index, all} and code in
    /// {none, hamming74, repN}; repeatable.
    #[arg(long)]
    pub fec: Vec<String>,
    #[arg(long, value_enum)]
    pub index_pipeline: Option<PipelineArg>,
    /// Per-slot trace CSV (single noise level only).
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModulationArg {
    Pam,
    Qam,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FadingArg {
    Unit,
    Rayleigh,
    Rician,
    Nakagami,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PipelineArg {
    Slot,
    Frame,
}

#[derive(Debug, Args)]
pub struct DumpWrapArgs {
    #[arg(long)]
    pub ma: Option<u32>,
    #[arg(long)]
    pub mb: Option<u32>,
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: ErrorBody<'a>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    category: &'a str,
    exit_code: u8,
    message: String,
}

fn exit_code(category: Category) -> u8 {
    match category {
        Category::Config => 2,
        Category::Tractability => 3,
        Category::Runtime => 4,
    }
}

fn report(category: Category, message: String) -> ExitCode {
    let code = exit_code(category);
    let name = match category {
        Category::Config => "config",
        Category::Tractability => "tractability",
        Category::Runtime => "runtime",
    };
    let body = ErrorReport {
        error: ErrorBody {
            category: name,
            exit_code: code,
            message,
        },
    };
    let line = serde_json::to_string(&body).unwrap_or_else(|_| "{}".into());
    let _ = writeln!(std::io::stderr(), "{line}");
    ExitCode::from(code)
}

fn configure_workers() -> Result<()> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Error::Config(format!(
            "{WORKERS_ENV} must be a positive integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}

fn execute(cli: Cli) -> Result<()> {
    configure_workers()?;
    let output = commands::run(&cli)?;
    match &output.path {
        Some(path) => std::fs::write(path, &output.bytes)?,
        None => std::io::stdout().write_all(&output.bytes)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return report(Category::Config, e.to_string().trim().to_string()),
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(e.category(), e.to_string()),
    }
}
