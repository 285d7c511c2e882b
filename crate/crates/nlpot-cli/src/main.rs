//! Command-line runner. Exit codes: 0 success, 1 acceptance failure,
//! 2 configuration error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nlpot_cli::config;
use nlpot_cli::scenarios::{self, RunContext, RunError};

#[derive(Parser)]
#[command(
    name = "nlpot",
    about = "Nonlinear potential theory at desk scale: solves, capacities, Wolff potentials, thinness, blow-downs",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario configuration (TOML, or JSON by extension/content).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for reports and data series.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Override the grid spacing of the scenario.
    #[arg(long, global = true)]
    grid_h: Option<f64>,

    /// Override the regularization parameter.
    #[arg(long, global = true)]
    epsilon: Option<f64>,

    /// Seed for randomized property sweeps.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,

    /// Worker threads (0 = all cores); reports are ordered either way.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Dirichlet solve with measure data.
    Solve,
    /// Variational capacity of a radial condenser.
    Capacity {
        /// Compare against a closed form ("radial").
        #[arg(long)]
        oracle: Option<String>,
    },
    /// Wolff potential evaluations streamed to CSV.
    Wolff,
    /// Dyadic thinness series and verdict.
    Thinness,
    /// Blow-down profiles of a synthetic singularity.
    Blowdown,
    /// Exponential-integrability sweep for density families.
    Bm,
    /// Conformal-metric and hypersurface applications.
    Geometry,
    /// Run every acceptance criterion and emit a pass/fail table.
    Acceptance,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let ctx = RunContext {
        out: cli.out.clone(),
        seed: cli.seed,
        threads: cli.threads,
        grid_h_override: cli.grid_h,
        epsilon_override: cli.epsilon,
    };
    if let Err(e) = scenarios::ensure_out_dir(&ctx.out) {
        eprintln!("{e}");
        return ExitCode::from(2);
    }

    let load_config = || -> Result<config::Config, RunError> {
        match &cli.config {
            Some(path) => Ok(config::load(path)?),
            None => Err(RunError::Config(
                "this subcommand needs --config PATH".into(),
            )),
        }
    };

    let outcome: Result<ExitCode, RunError> = (|| {
        match &cli.command {
            Command::Solve => scenarios::run_solve(&load_config()?, &ctx)?,
            Command::Capacity { oracle } => {
                scenarios::run_capacity(&load_config()?, &ctx, oracle.as_deref())?
            }
            Command::Wolff => scenarios::run_wolff(&load_config()?, &ctx)?,
            Command::Thinness => scenarios::run_thinness(&load_config()?, &ctx)?,
            Command::Blowdown => scenarios::run_blowdown(&load_config()?, &ctx)?,
            Command::Bm => scenarios::run_bm(&load_config()?, &ctx)?,
            Command::Geometry => scenarios::run_geometry(&load_config()?, &ctx)?,
            Command::Acceptance => {
                let ok = scenarios::run_acceptance(&ctx, false)?;
                return Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) });
            }
        }
        Ok(ExitCode::SUCCESS)
    })();

    match outcome {
        Ok(code) => code,
        Err(RunError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(RunError::Io(e)) => {
            eprintln!("io error: {e}");
            ExitCode::from(2)
        }
    }
}
