//! `effattn`: efficient-attention projections, identifiability checks,
//! kernel adversarials, metrics, and synthetic experiments over CSV files.
//!
//! Exit codes: 0 success (for `check`: identifiable), 1 identifiability
//! outcomes (non-identifiable / no adversarial), 2 parse, shape or usage
//! errors, 3 numerical validation failures.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

mod commands;
mod error;
mod io;
mod manifest;

#[derive(Parser)]
#[command(name = "effattn", version, about = "Efficient attention toolkit")]
struct Cli {
    /// Relative rank threshold (default 1e-10; beats EFFATTN_TOL)
    #[arg(long, global = true)]
    rank_tol: Option<f64>,
    /// Absolute assertion threshold (default 1e-9; beats EFFATTN_TOL)
    #[arg(long, global = true)]
    check_tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Project an attention matrix onto Im([T,1]) and write the result
    Project {
        /// Attention matrix CSV (square, rows are distributions)
        a: Option<PathBuf>,
        /// Hidden-states matrix CSV (same row count as A)
        t: Option<PathBuf>,
        /// Output CSV for the projected matrix
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Batch mode: JSON manifest with {id, a_path, t_path} entries
        #[arg(long, conflicts_with_all = ["a", "t", "out"])]
        manifest: Option<PathBuf>,
        /// Output directory for batch mode (files named <id>_eff.csv)
        #[arg(long, requires = "manifest")]
        out_dir: Option<PathBuf>,
        /// Skip the projection guarantee assertions
        #[arg(long)]
        no_validate: bool,
    },
    /// Print the identifiability verdict for a hidden-states matrix as JSON
    Check {
        /// Hidden-states matrix CSV
        t: PathBuf,
        /// Attention head dimension for the sufficiency bound
        /// (defaults to the column count of T)
        #[arg(long)]
        dv: Option<usize>,
    },
    /// Generate an adversarial attention matrix along Ker([T,1]')
    Adversarial {
        /// Attention matrix CSV (square, strictly positive rows)
        a: PathBuf,
        /// Hidden-states matrix CSV
        t: PathBuf,
        /// RNG seed for the kernel directions
        #[arg(long)]
        seed: u64,
        /// Output CSV; a JSON sidecar lands next to it
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Run a synthetic experiment and write its report (CSV + JSON)
    Experiment {
        /// 1: efficient vs raw predictions, 2: adversarial pairs,
        /// 3: complement intervention
        #[arg(value_parser = clap::value_parser!(u8).range(1..=3))]
        which: u8,
        /// Sequence length d_s
        #[arg(long)]
        ds: usize,
        /// Embedding dimension d
        #[arg(long)]
        d: usize,
        /// Head dimension d_v
        #[arg(long)]
        dv: usize,
        /// Query/key dimension d_q
        #[arg(long)]
        dq: usize,
        /// Number of samples
        #[arg(long)]
        n: usize,
        /// Master seed
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report base path; .json and .csv extensions are added
        #[arg(short, long)]
        out: PathBuf,
        /// Dataset label embedded in the report
        #[arg(long)]
        label: Option<String>,
        /// Experiment 3: renormalize 1-A before projecting
        #[arg(long)]
        renormalize_complement: bool,
    },
    /// Compare two prediction vectors (single-column CSVs), print JSON
    Metrics { p: PathBuf, q: PathBuf },
}

fn run(cli: Cli) -> Result<i32, error::CliError> {
    let (rank_tol, check_tol) = (cli.rank_tol, cli.check_tol);
    match cli.command {
        Command::Project {
            a,
            t,
            out,
            manifest,
            out_dir,
            no_validate,
        } => commands::cmd_project(
            a,
            t,
            out,
            manifest,
            out_dir,
            no_validate,
            rank_tol,
            check_tol,
        ),
        Command::Check { t, dv } => commands::cmd_check(&t, dv, rank_tol, check_tol),
        Command::Adversarial { a, t, seed, out } => {
            commands::cmd_adversarial(&a, &t, seed, &out, rank_tol, check_tol)
        }
        Command::Experiment {
            which,
            ds,
            d,
            dv,
            dq,
            n,
            seed,
            out,
            label,
            renormalize_complement,
        } => commands::cmd_experiment(
            which,
            ds,
            d,
            dv,
            dq,
            n,
            seed,
            &out,
            label,
            renormalize_complement,
            rank_tol,
            check_tol,
        ),
        Command::Metrics { p, q } => commands::cmd_metrics(&p, &q),
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
