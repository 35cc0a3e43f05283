#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "sdred", version, about = "SD-RED reconstructions, sweeps and bound checks under mismatched priors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// `key = value` run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `out` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed (overrides `seed` in the config).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Reconstruct a phantom from subsampled Fourier data.
    Recon(Common),
    /// Run a (tau, sigma, epsilon) grid on a theory family.
    Sweep(Common),
    /// Measure the distance between a prior and its perturbation over noise levels.
    PriorDistance(Common),
    /// Check convergence bounds on a randomized instance family.
    VerifyBounds {
        #[command(flatten)]
        common: Common,
        #[arg(long, hide = true, default_value_t = 1.0)]
        test_a_scale: f64,
    },
    /// Compare 1-D MAP denoisers of two nearby log-concave densities.
    #[command(name = "oracle-1d")]
    Oracle1d(Common),
}

fn prepare(common: &Common) -> Result<(RunConfig, PathBuf), CliError> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.set("seed", seed);
    }
    if let Some(out) = &common.out {
        cfg.set("out", out.display());
    }
    let out: PathBuf = cfg.required::<String>("out")?.into();
    std::fs::create_dir_all(&out)
        .map_err(|e| CliError::Config(format!("cannot create output directory {}: {e}", out.display())))?;
    Ok((cfg, out))
}

fn run(command: &Command) -> Result<String, CliError> {
    type Handler = fn(&mut RunConfig, &Path) -> Result<String, CliError>;
    let (common, handler): (&Common, Handler) = match command {
        Command::Recon(c) => (c, commands::recon),
        Command::Sweep(c) => (c, commands::sweep),
        Command::PriorDistance(c) => (c, commands::prior_distance),
        Command::Oracle1d(c) => (c, commands::oracle_1d),
        Command::VerifyBounds { common, test_a_scale } => {
            let (mut cfg, out) = prepare(common)?;
            return commands::verify_bounds(&mut cfg, &out, *test_a_scale);
        }
    };
    let (mut cfg, out) = prepare(common)?;
    handler(&mut cfg, &out)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
