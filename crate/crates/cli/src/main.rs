use std::path::PathBuf;
use std::process::exit;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use madmm_cli::commands::{self, SolveOverrides};
use madmm_cli::exit_code;

#[derive(Parser)]
#[command(
    name = "madmm",
    version,
    about = "Majorized ADMM for linearly constrained convex programs with coupled objectives"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate an instance file from a spec file
    Generate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Verify convergence conditions; exit 0 iff the clause passes
    Check {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// One of: auto, global, rate, quadratic
        #[arg(long, default_value = "auto")]
        clause: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the solver; writes series.csv and summary.json into --out
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long = "max-iters")]
        max_iters: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        /// Reference triple JSON enabling the Lyapunov columns
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Skip the convergence-condition gate
        #[arg(long)]
        force: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit scaled rate sequences (k, min-bound*k, feas*k, ergodic-feas*k)
    RateStudy {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        kmax: usize,
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the per-iteration descent inequalities at sampled probes
    Certify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 100)]
        probes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        iters: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            exit(exit_code::OK);
        }
        Err(e) => {
            eprintln!("{e}");
            exit(exit_code::IO_OR_SCHEMA);
        }
    };

    let result = match cli.cmd {
        Cmd::Generate { spec, out } => commands::cmd_generate(&spec, &out),
        Cmd::Check {
            instance,
            config,
            clause,
            out,
        } => commands::cmd_check(&instance, &config, &clause, out.as_deref()),
        Cmd::Solve {
            instance,
            config,
            tau,
            sigma,
            max_iters,
            tol,
            reference,
            force,
            out,
        } => commands::cmd_solve(
            &instance,
            &config,
            &SolveOverrides {
                tau,
                sigma,
                max_iters,
                tol,
                force,
            },
            reference.as_deref(),
            &out,
        ),
        Cmd::RateStudy {
            instance,
            config,
            kmax,
            reference,
            out,
        } => commands::cmd_rate_study(&instance, &config, kmax, reference.as_deref(), &out),
        Cmd::Certify {
            instance,
            config,
            probes,
            seed,
            iters,
            out,
        } => commands::cmd_certify(&instance, &config, probes, seed, iters, &out),
    };

    match result {
        Ok(code) => exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            exit(e.exit_code());
        }
    }
}
