//! Command-line front end: square roots, metric comparisons, preimage
//! enumeration, bound suites, and Monte-Carlo calibration, with
//! machine-readable JSON/CSV output.
//!
//! Exit codes: 0 success, 1 internal/numerical failure, 2 invalid input.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "qig", about = "Information geometry of density matrices via Hermitian square roots")]
struct Cli {
    /// JSON config file; command-line flags override its fields.
    #[arg(long, global = true)]
    config: Option<std::path::PathBuf>,

    /// RNG seed; mandatory for stochastic commands (no wall-clock default).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Monte-Carlo sample count.
    #[arg(long, global = true)]
    samples: Option<usize>,

    /// Matrix dimension for ensemble commands.
    #[arg(long, global = true)]
    dim: Option<usize>,

    /// Output path; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<std::path::PathBuf>,

    /// Worker threads for the Monte-Carlo batches.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Principal square root of a density matrix file.
    Sqrt {
        /// Input density matrix (JSON {dim, re, im}).
        #[arg(long)]
        input: Option<std::path::PathBuf>,
    },
    /// Compare the Monte-Carlo information metric with 4 tr(d xi d xi).
    Metric {
        /// Built-in family: qubit-pure, qubit-mixed, unitary-curve, constant.
        #[arg(long)]
        family: Option<String>,
        /// Hamiltonian file for the unitary-curve family.
        #[arg(long)]
        hamiltonian: Option<std::path::PathBuf>,
        /// Parameter points, each a comma-separated vector ("0.2,1.3").
        #[arg(long = "point")]
        points: Vec<String>,
    },
    /// Enumerate the square-root preimages of a qubit density matrix.
    Preimages {
        a: f64,
        b: f64,
        c: f64,
        /// Also write the covering-sphere mesh CSV here.
        #[arg(long)]
        mesh_out: Option<std::path::PathBuf>,
        /// Mesh resolution (rounded up to a multiple of 4).
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Run the uncertainty-bound theorem suite on a random ensemble.
    Bounds {
        /// Number of random instances.
        #[arg(long)]
        count: Option<usize>,
        /// Restrict the ensemble to pure states.
        #[arg(long)]
        pure: bool,
        /// Summary CSV path.
        #[arg(long)]
        summary: Option<std::path::PathBuf>,
        /// Include kappa-calibration metadata in the summary.
        #[arg(long)]
        kappa: bool,
    },
    /// Calibrate the dual pure-state-integral constant for a dimension.
    Calibrate {
        /// Number of (observable, state) calibration pairs.
        #[arg(long)]
        pairs: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if err.is_invalid_input() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(cli: Cli) -> qig::Result<()> {
    let cfg = config::Settings::load(
        cli.config.as_deref(),
        cli.seed,
        cli.samples,
        cli.dim,
        cli.out.clone(),
        cli.threads,
    )?;
    if let Some(n) = cfg.threads {
        // ignore failure if a global pool already exists (tests call run twice)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Sqrt { input } => commands::cmd_sqrt(&cfg, input.as_deref()),
        Command::Metric {
            family,
            hamiltonian,
            points,
        } => commands::cmd_metric(&cfg, family.as_deref(), hamiltonian.as_deref(), &points),
        Command::Preimages {
            a,
            b,
            c,
            mesh_out,
            resolution,
        } => commands::cmd_preimages(&cfg, a, b, c, mesh_out.as_deref(), resolution),
        Command::Bounds {
            count,
            pure,
            summary,
            kappa,
        } => commands::cmd_bounds(&cfg, count, pure, summary.as_deref(), kappa),
        Command::Calibrate { pairs } => commands::cmd_calibrate(&cfg, pairs),
    }
}
