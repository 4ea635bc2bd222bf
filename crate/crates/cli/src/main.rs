use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use cfres_cli::config::{ClockKind, ExperimentConfig, Preset};
use cfres_cli::experiment::{drop_summary, run_experiment, write_json};
use cfres_cli::validate::run_validation;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cfres", version, about = "Secure cell-free massive MIMO outage and recovery experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print a summary of one network drop.
    Drop(Common),
    /// Run every drop at the configured priority and resilience weights.
    Run(Common),
    /// Run every drop over the configured omega and lambda grids.
    Sweep(Common),
    /// Check the closed forms and the SCA against their oracles.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration; every key is optional.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (run, sweep) or file (drop, validate).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed; overrides `drops.base_seed` (and `validate.seed`).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    #[arg(long, value_enum)]
    clock: Option<ClockKind>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.drops.base_seed = seed;
            cfg.validate.seed = seed;
        }
        if let Some(p) = self.preset {
            cfg.preset = p;
        }
        if let Some(c) = self.clock {
            cfg.resilience.clock = c;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Drop(c) => {
            let cfg = c.load()?;
            let summary = drop_summary(&cfg, cfg.drops.base_seed)?;
            match c.out {
                Some(path) => write_json(&path, &summary)?,
                None => {
                    let text = serde_json::to_string_pretty(&summary)?;
                    // a closed pipe (e.g. `| head`) is not an error
                    let _ = writeln!(std::io::stdout(), "{text}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Run(c) => experiment(c, false),
        Command::Sweep(c) => experiment(c, true),
        Command::Validate(c) => {
            let cfg = c.load()?;
            let report = run_validation(&cfg)?;
            print!("{}", report.table());
            if let Some(path) = c.out {
                write_json(&path, &report)?;
            }
            if report.passed() {
                Ok(ExitCode::SUCCESS)
            } else {
                let names: Vec<_> = report.failures().iter().map(|l| l.name.clone()).collect();
                eprintln!("failed checks: {}", names.join(", "));
                Ok(ExitCode::FAILURE)
            }
        }
    }
}

fn experiment(c: Common, sweep: bool) -> Result<ExitCode> {
    let cfg = c.load()?;
    let out = c.out.clone().unwrap_or_else(|| PathBuf::from("runs/latest"));
    let exp = run_experiment(&cfg, &out, sweep).with_context(|| format!("writing to {}", out.display()))?;
    let m = &exp.manifest;
    println!("{} trace files, manifest {} (config {})", m.runs.len(), out.join("manifest.json").display(), &m.config_hash[..12]);
    for d in m.drops.iter().filter(|d| !d.ok || !d.errors.is_empty()) {
        eprintln!("drop {}: {}", d.seed, d.errors.join("; "));
    }
    if exp.all_failed() {
        bail!("every drop failed");
    }
    Ok(ExitCode::SUCCESS)
}
