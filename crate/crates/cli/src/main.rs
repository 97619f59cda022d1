//! `addfunc`: construct and evaluate estimators of additive functionals of a
//! sparse Gaussian mean, and the matching lower-bound objects.
//!
//! Exit codes: 0 on success, 2 when a precondition on the inputs is violated,
//! 1 on numerical failure during a run.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::CliError;

#[derive(Parser)]
#[command(
    name = "addfunc",
    version,
    about = "Minimax estimation of additive functionals of a sparse Gaussian mean"
)]
struct Cli {
    /// Config file with key=value lines; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for all randomized subcommands.
    #[arg(long, global = true, env = "ADDFUNC_SEED")]
    seed: Option<u64>,
    /// Cap on the rayon worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the data payload to this file instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct FunctionalArg {
    /// Functional spec: a name (`square`, `identity`, `neg_t_log`), a
    /// parametrized name (`abs_pow:0.5`), or an expression
    /// (`expr:abs(t)^1.5` with optional `@f0=VALUE`).
    #[arg(long)]
    functional: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Best uniform polynomial approximation of the functional.
    Approx {
        #[command(flatten)]
        functional: FunctionalArg,
        #[arg(long)]
        degree: Option<usize>,
        /// Interval as `a,b`.
        #[arg(long, allow_hyphen_values = true)]
        interval: Option<String>,
        /// `remez` (default) or `lp` (the grid oracle).
        #[arg(long)]
        method: Option<String>,
        #[arg(long = "n-grid")]
        n_grid: Option<usize>,
    },
    /// Estimate the additive functional from observations in a CSV file.
    Estimate {
        #[command(flatten)]
        functional: FunctionalArg,
        /// Observations, one per line (`y1,y2` pairs in oracle mode).
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        s: Option<usize>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long = "noise-mode")]
        noise_mode: Option<String>,
        /// `multiscale` (default) or `simplified`.
        #[arg(long)]
        estimator: Option<String>,
        #[arg(long = "M")]
        m: Option<f64>,
    },
    /// Monte Carlo risk measurement; emits CSV.
    Risk {
        #[command(flatten)]
        functional: FunctionalArg,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        s: Option<usize>,
        #[arg(long = "M")]
        m: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long = "noise-mode")]
        noise_mode: Option<String>,
        #[arg(long)]
        reps: Option<usize>,
        /// `zero`, `all-at:V`, `spread:v1,v2,...`, or `sweep` (default).
        #[arg(long)]
        theta: Option<String>,
        /// `auto` (simplified iff s = d), `multiscale`, or `simplified`.
        #[arg(long)]
        estimator: Option<String>,
    },
    /// Moment-matched prior pair and the two-prior certificate.
    Lowerbound {
        #[command(flatten)]
        functional: FunctionalArg,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        s: Option<usize>,
        #[arg(long = "M")]
        m: Option<f64>,
    },
    /// The minimax-rate lower expression over the index range.
    Rates {
        #[command(flatten)]
        functional: FunctionalArg,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        s: Option<usize>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Numeric probes of the growth/approximation assumptions.
    Probe {
        #[command(flatten)]
        functional: FunctionalArg,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        s: Option<usize>,
        #[arg(long = "grid-size")]
        grid_size: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // Ignore the error if a pool already exists (e.g. under tests).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Precondition(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = config::ConfigFile::load(cli.config.as_deref())?;
    let ctx = commands::Context {
        file,
        seed: cli.seed,
        out: cli.out,
    };
    match cli.command {
        Command::Approx {
            functional,
            degree,
            interval,
            method,
            n_grid,
        } => commands::approx(&ctx, functional.functional, degree, interval, method, n_grid),
        Command::Estimate {
            functional,
            input,
            s,
            c,
            noise_mode,
            estimator,
            m,
        } => commands::estimate(&ctx, functional.functional, input, s, c, noise_mode, estimator, m),
        Command::Risk {
            functional,
            d,
            s,
            m,
            c,
            noise_mode,
            reps,
            theta,
            estimator,
        } => commands::risk(
            &ctx, functional.functional, d, s, m, c, noise_mode, reps, theta, estimator,
        ),
        Command::Lowerbound {
            functional,
            d,
            s,
            m,
        } => commands::lowerbound(&ctx, functional.functional, d, s, m),
        Command::Rates {
            functional,
            d,
            s,
            points,
        } => commands::rates(&ctx, functional.functional, d, s, points),
        Command::Probe {
            functional,
            d,
            s,
            grid_size,
        } => commands::probe(&ctx, functional.functional, d, s, grid_size),
    }
}
