//! Batch front end: build chains with snapshots, compute diagnostics CSVs and
//! export plot data.

pub mod config;
pub mod error;
pub mod report;
pub mod run;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use towerplex_core::TransferMode;

pub use config::{RunConfig, StatsConfig};
pub use error::{CliError, CliResult};
pub use report::{cmd_export, cmd_stats, compute_stats};
pub use run::{cmd_build, cmd_resume, load_chain};

#[derive(Debug, Parser)]
#[command(name = "towerplex", version, about = "Exact multiplexing chains and their mixing diagnostics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Snapshot and CSV directory.
    #[arg(long, default_value = "towerplex-out")]
    pub out: PathBuf,
    #[arg(long)]
    pub stages: Option<usize>,
    #[arg(long)]
    pub piece_budget: Option<usize>,
    /// Transfer formula: uniform or literal.
    #[arg(long)]
    pub mode: Option<TransferMode>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build stages 1..N and snapshot each one.
    Build(Common),
    /// Write weights, rwm, rigidity, power and sweep CSVs from snapshots.
    Stats(Common),
    /// Continue a snapshotted chain up to the requested depth.
    Resume(Common),
    /// Turn the CSVs into (x, y) plot data under `<out>/plot`.
    Export(Common),
}

fn load_config(c: &Common) -> CliResult<RunConfig> {
    let base = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::from_toml_str("")?,
    };
    Ok(base.with_flags(c.stages, c.piece_budget, c.mode))
}

/// Runs one command; the returned lines are progress output for stdout.
pub fn run(cli: &Cli) -> CliResult<Vec<String>> {
    match &cli.command {
        Command::Build(c) => {
            let cfg = load_config(c)?;
            let chain = cmd_build(&cfg, &c.out)?;
            Ok(chain_summary(&chain))
        }
        Command::Resume(c) => {
            let cfg = load_config(c)?;
            let chain = cmd_resume(&cfg, &c.out)?;
            Ok(chain_summary(&chain))
        }
        Command::Stats(c) => {
            let cfg = load_config(c)?;
            let chain = load_chain(&cfg, &c.out)?;
            cmd_stats(&cfg, &chain, &c.out)?;
            Ok(report::CSV_FILES.iter().map(|f| format!("wrote {}", c.out.join(f).display())).collect())
        }
        Command::Export(c) => {
            let files = cmd_export(&c.out)?;
            Ok(files.iter().map(|f| format!("wrote {}", f.display())).collect())
        }
    }
}

fn chain_summary(chain: &towerplex_core::Chain) -> Vec<String> {
    let mut lines: Vec<String> = chain
        .stages()
        .iter()
        .map(|s| format!("stage {} b={} h={} eps={} M={}", s.n, s.cycle.b, s.plan.h, s.plan.eps, s.plan.m))
        .collect();
    if let Some(k) = chain.kappa() {
        lines.push(format!("kappa {k}"));
    }
    lines
}
