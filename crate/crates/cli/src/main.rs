//! `hilange`: spectra, time series, verification and analyses of truncated
//! Langevin systems from a JSON config.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use commands::{Report, Session};
use config::{parse_tolerance, RunConfig};

#[derive(Parser)]
#[command(name = "hilange", version, about = "Higher-order truncation of nonlinear quantum Langevin equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Random seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Tolerance override `K=V`; repeatable.
    #[arg(long = "tolerance", global = true, value_parser = parse_tolerance)]
    tolerance: Vec<(String, f64)>,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Output spectral densities, metadata and a stability report.
    Spectrum,
    /// Ensemble or deterministic time series; a truncation study when `orders` is set.
    Timeseries,
    /// Replays the reference commutator tables and closure scans.
    Verify,
    /// Steady-state photon number branches over a sweep.
    Bistability,
    /// Optical output at the two mechanical sidebands.
    Asymmetry,
    /// Eigenvalue stability of an assembled system.
    Stability,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Timeseries => "timeseries",
            Command::Verify => "verify",
            Command::Bistability => "bistability",
            Command::Asymmetry => "asymmetry",
            Command::Stability => "stability",
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("HILANGE_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().with_context(|| format!("HILANGE_THREADS='{v}' is not a thread count"))?;
    if n == 0 {
        anyhow::bail!("HILANGE_THREADS must be at least 1");
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> Result<Report> {
    configure_threads()?;
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(c) = &cfg.command {
        if c != cli.command.name() {
            anyhow::bail!("config is for command '{c}', not '{}'", cli.command.name());
        }
    }
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    let tolerances = cfg.tolerances(&cli.tolerance)?;
    let mut explicit: Vec<String> = cfg.tolerance.keys().cloned().collect();
    explicit.extend(cli.tolerance.iter().map(|(k, _)| k.clone()));
    let out = cli.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("hilange-out"));
    commands::ensure_dir(&out)?;
    let session = Session { cfg, out, tolerances, explicit };
    match cli.command {
        Command::Spectrum => commands::spectrum(&session),
        Command::Timeseries => commands::timeseries(&session),
        Command::Verify => commands::verify_cmd(&session),
        Command::Bistability => commands::bistability(&session),
        Command::Asymmetry => commands::asymmetry(&session),
        Command::Stability => commands::stability(&session),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(report) => {
            for f in &report.files {
                println!("{}", f.display());
            }
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            if report.warnings.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
