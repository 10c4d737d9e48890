use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nli_core::cli::{cmd_design, cmd_experiment, cmd_jsi, cmd_marginal, RunManifest};
use nli_core::config::RunConfig;
use nli_core::{Error, Result};

#[derive(Parser)]
#[command(name = "nli", version, about = "Joint spectra of photon pairs from multi-stage fiber nonlinear interferometers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides output_dir)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override
    #[arg(long)]
    seed: Option<u64>,
    /// Points per grid axis (overrides both)
    #[arg(long)]
    grid_points: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Joint spectral intensity map and island catalog
    Jsi(Common),
    /// Marginal spectra and fringe visibilities
    Marginal(Common),
    /// Binomial stage lengths and roundness predictor per order
    Design {
        #[arg(long)]
        stages: usize,
        /// First stage length, m
        #[arg(long)]
        l1: f64,
        /// Highest order reported
        #[arg(long, default_value_t = 8)]
        max_m: u32,
        /// Optional config supplying pump and gap fiber
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthetic scan with Raman background, fits and subtraction
    Experiment(Common),
}

fn load(common: &Common) -> Result<(RunConfig, PathBuf)> {
    let mut config = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        config.seed = Some(seed);
    }
    if let Some(n) = common.grid_points {
        config.grid.signal_points = n;
        config.grid.idler_points = n;
    }
    if let Some(out) = &common.out {
        config.output_dir = Some(out.clone());
    }
    let out = config.output_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    Ok((config, out))
}

fn report(manifest: &RunManifest) {
    for w in &manifest.warnings {
        eprintln!("warning: {w}");
    }
    for f in &manifest.files {
        println!("{}  {}", f.sha256, f.name);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Jsi(c) => {
            let (config, out) = load(&c)?;
            report(&cmd_jsi(&config, &out)?);
        }
        Command::Marginal(c) => {
            let (config, out) = load(&c)?;
            report(&cmd_marginal(&config, &out)?);
        }
        Command::Experiment(c) => {
            let (config, out) = load(&c)?;
            report(&cmd_experiment(&config, &out)?);
        }
        Command::Design {
            stages,
            l1,
            max_m,
            config,
            out,
        } => {
            let config = config.as_deref().map(RunConfig::load).transpose()?;
            let (design, manifest) = cmd_design(stages, l1, max_m, config.as_ref(), out.as_deref())?;
            let lengths: Vec<String> = design.lengths.iter().map(|l| format!("{l:.3}")).collect();
            println!("stages: {}  lengths (m): {}", design.n_stages, lengths.join(" / "));
            println!("{:>3}  {:>14}  {:>8}", "m", "sigma_int", "ratio");
            for r in &design.rows {
                let mark = if r.flagged { "  <- round" } else { "" };
                println!("{:>3}  {:>14.4e}  {:>8.4}{mark}", r.m, r.sigma_int_rad_per_s, r.stripe_ratio);
            }
            if let Some(m) = manifest {
                report(&m);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Validation(violations)) => {
            eprintln!("error: invalid interferometer");
            for v in violations {
                eprintln!("  - {v}");
            }
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
