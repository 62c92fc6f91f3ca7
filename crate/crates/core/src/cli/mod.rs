//! Command-line front end: configuration, experiments, verification and
//! result files.

pub mod config;
pub mod experiments;
pub mod output;
pub mod verify;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use config::{Overrides, RunConfig};
pub use experiments::{run_scaling, run_solve, run_sweep_omega, ScalingRow, SolveReport, SweepRow};
pub use output::{ExperimentRecord, Metadata};
pub use verify::{run_verify, VerifyReport};

use crate::solvers::Method;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("cannot parse config: {0}")]
    Parse(serde_json::Error),

    #[error(transparent)]
    Solver(#[from] crate::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use crate::Error as E;
        match self {
            CliError::Config { .. } | CliError::Parse(_) => EXIT_CONFIG,
            CliError::Solver(E::NotConverged { .. } | E::Breakdown { .. }) => EXIT_NOT_CONVERGED,
            CliError::Solver(
                E::InvalidGrid(_)
                | E::NotSpd(_)
                | E::InvalidParameter(_)
                | E::VoxelFormat { .. }
                | E::UnknownPhase(_)
                | E::NodeCountMismatch { .. },
            ) => EXIT_CONFIG,
            _ => EXIT_FAILURE,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ffthom", version, about = "FFT-based homogenization of periodic conductivity")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the configured cell problem and write result.json.
    Solve(CommonArgs),
    /// Count CG and FFTH iterations over omega and contrast; writes sweep.csv.
    SweepOmega(CommonArgs),
    /// Time CG and FFTH over grid sizes; writes scaling.csv.
    Scaling(CommonArgs),
    /// Run the seeded property suite; writes verify.json.
    Verify(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, overriding `output.directory`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub method: Option<Method>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Accept 3D grids with more than 96 nodes per axis.
    #[arg(long)]
    pub allow_large: bool,
    #[arg(long)]
    pub record_iterates: bool,
    /// Corrupt one Green operator block during `verify`.
    #[arg(long)]
    pub inject_fault: bool,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            out: self.out.clone(),
            method: self.method,
            tol: self.tol,
            max_iter: self.max_iter,
            seed: self.seed,
            record_iterates: self.record_iterates,
        }
    }

    fn load(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::from_path(&self.config)?;
        cfg.apply(&self.overrides());
        cfg.validate(self.allow_large)?;
        Ok(cfg)
    }
}

fn execute(command: &Command) -> Result<i32, CliError> {
    match command {
        Command::Solve(args) => {
            let cfg = args.load()?;
            let report = run_solve(&cfg)?;
            println!(
                "{}: {} iterations, relative residual {:.3e}, {:.3} s",
                report.method.name(),
                report.iterations,
                report.final_residual,
                report.wall_time
            );
            if let Some(eff) = &report.effective_tensor {
                println!("effective tensor: {:?}", eff.tensor);
            }
            if report.converged {
                Ok(EXIT_OK)
            } else {
                eprintln!("not converged after {} iterations", report.iterations);
                Ok(EXIT_NOT_CONVERGED)
            }
        }
        Command::SweepOmega(args) => {
            let cfg = args.load()?;
            let rows = experiments::write_sweep(&cfg)?;
            let mark = |converged: bool| if converged { "" } else { " (not converged)" };
            for r in &rows {
                println!(
                    "rho {:>8} omega {:.2}: cg {:>5}{} ffth {:>6}{} ratio {:.3}",
                    r.rho,
                    r.omega,
                    r.iters_cg,
                    mark(r.converged_cg),
                    r.iters_ffth,
                    mark(r.converged_ffth),
                    r.ratio
                );
            }
            Ok(EXIT_OK)
        }
        Command::Scaling(args) => {
            let cfg = args.load()?;
            let rows = experiments::write_scaling(&cfg)?;
            for r in &rows {
                println!(
                    "n {:>4}: cg {:.3} s ({} it), ffth {:.3} s ({} it), per-iteration ratio {:.2}",
                    r.n, r.time_cg, r.iters_cg, r.time_ffth, r.iters_ffth, r.per_iter_ratio
                );
            }
            Ok(EXIT_OK)
        }
        Command::Verify(args) => {
            let mut cfg = RunConfig::from_path(&args.config)?;
            cfg.apply(&args.overrides());
            let report = run_verify(cfg.seed, args.inject_fault);
            output::ensure_dir(&cfg.output.directory)?;
            output::write_json(&cfg.output.directory.join("verify.json"), &report)?;
            for c in &report.checks {
                println!("{} {} ({:.3e} <= {:.0e})", if c.passed { "pass" } else { "FAIL" }, c.name, c.value, c.threshold);
            }
            Ok(if report.passed { EXIT_OK } else { EXIT_VERIFY })
        }
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
