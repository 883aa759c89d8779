//! `fbcmc` — batch driver for the free-boundary CMC disk solver.
//!
//! Exit status: 0 success, 2 convergence failure, 3 config error, 1 other.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ConfigError, Overrides, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "fbcmc", version, about = "Free-boundary constant-mean-curvature disks")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run config; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Prescribed mean curvature.
    #[arg(long = "H", global = true, allow_negative_numbers = true)]
    h: Option<f64>,
    #[arg(long, global = true)]
    eps: Option<f64>,
    #[arg(long, global = true)]
    p: Option<f64>,
    /// Disk mesh refinement level.
    #[arg(long, global = true)]
    level: Option<u32>,
    /// flat | cap | constant | PATH to an OBJ with a .bnd sibling.
    #[arg(long, global = true)]
    init: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Critical point from the chosen initializer.
    Solve,
    /// Warm-started solves along the ε (or H) schedule.
    Continue,
    /// Mountain pass over the cap sweepout (plus the width sweep if enabled).
    Minmax,
    /// Morse indices of a saved (or freshly solved) map.
    Spectrum,
    /// Max principle, Hopf, quantization, Hersch and index comparison.
    Check,
    /// Format conversion of a map.
    Export {
        #[arg(long, default_value = "vtk")]
        format: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ov = Overrides {
        out: cli.out.clone(),
        seed: cli.seed,
        h: cli.h,
        eps: cli.eps,
        p: cli.p,
        level: cli.level,
        init: cli.init.clone(),
    };
    let resolved = match RunConfig::load(cli.config.as_deref(), &ov) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("fbcmc: {e}");
            return ExitCode::from(3);
        }
    };
    println!("config {}", resolved.hash);
    let res = match &cli.command {
        Command::Solve => commands::solve(&resolved),
        Command::Continue => commands::continue_(&resolved),
        Command::Minmax => commands::minmax(&resolved),
        Command::Spectrum => commands::spectrum(&resolved),
        Command::Check => commands::check(&resolved),
        Command::Export { format } => commands::export(&resolved, format),
    };
    match res {
        Ok(o) if o.exit == 0 => {
            println!("{}", o.message);
            ExitCode::SUCCESS
        }
        Ok(o) => {
            eprintln!("fbcmc: convergence failure [config {}]: {}", resolved.hash, o.message);
            ExitCode::from(o.exit)
        }
        Err(e) => match e.downcast_ref::<ConfigError>() {
            Some(c) => {
                eprintln!("fbcmc: {c}");
                ExitCode::from(3)
            }
            None => {
                eprintln!("fbcmc: error [config {}]: {e:#}", resolved.hash);
                ExitCode::from(1)
            }
        },
    }
}
