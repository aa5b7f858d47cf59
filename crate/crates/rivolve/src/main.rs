use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use rivolve::{Axis, Outcome, RunConfig};

#[derive(Parser)]
#[command(name = "rivolve", version, about = "Incremental schemes and certificates for rate-independent systems")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `output.dir`.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve a configured run and certify it.
    Solve {
        #[arg(long)]
        config: PathBuf,
    },
    /// One run per value of a parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<f64>,
    },
    /// Bounds on the jump cost between two states.
    Jumpcost {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        z_minus: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        z_plus: Vec<f64>,
    },
    /// Certify a trajectory CSV.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trajectory: PathBuf,
    },
}

fn load(path: &PathBuf, seed: Option<u64>) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<Outcome> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring thread pool")?;
    }
    match &cli.cmd {
        Cmd::Solve { config } => {
            let cfg = load(config, cli.seed)?;
            rivolve::solve(&cfg, &cfg.out_dir(cli.out_dir.as_deref()))
        }
        Cmd::Sweep { config, axis, values } => {
            let cfg = load(config, cli.seed)?;
            rivolve::sweep(&cfg, *axis, values, &cfg.out_dir(cli.out_dir.as_deref()))
        }
        Cmd::Jumpcost { config, t, z_minus, z_plus } => {
            let cfg = load(config, cli.seed)?;
            rivolve::jumpcost(&cfg, *t, z_minus, z_plus, &cfg.out_dir(cli.out_dir.as_deref()))
        }
        Cmd::Verify { config, trajectory } => {
            let cfg = load(config, cli.seed)?;
            rivolve::verify(&cfg, trajectory, &cfg.out_dir(cli.out_dir.as_deref()))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            print!("{}", out.report.render());
            for f in &out.files {
                eprintln!("wrote {}", f.display());
            }
            if out.pass {
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
