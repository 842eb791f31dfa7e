use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tvgeo::commands::{
    self, CertifyOpts, DenoiseOpts, Output, SolveOpts, StabilityOpts, SweepOpts,
};
use tvgeo::CliError;
use tvgeo_core::certify::DEFAULT_EPSILON;

/// Total-variation denoising experiments: solves, certificate sweeps,
/// analytic certificate comparisons and tube-stability runs.
///
/// Parallelism is capped by the TVGEO_THREADS environment variable.
#[derive(Parser, Debug)]
#[command(name = "tvgeo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Denoise one image and write y, u, v, level lines and metrics.
    Denoise(DenoiseArgs),
    /// Noiseless lambda sweep estimating the minimal-norm certificate.
    Sweep(SweepArgs),
    /// Compare the numerical certificate with the analytic one.
    Certify(CertifyArgs),
    /// Tube-containment experiment over lambdas, noise levels and seeds.
    Stability(StabilityArgs),
}

#[derive(Args, Debug)]
struct SolverArgs {
    /// Dual step size (default 0.99 times the stability limit).
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, default_value_t = SolveOpts::default().max_iters)]
    max_iters: usize,
    /// Relative duality gap at which iterations stop.
    #[arg(long, default_value_t = SolveOpts::default().gap_tol)]
    gap_tol: f64,
}

impl SolverArgs {
    fn opts(&self) -> SolveOpts {
        SolveOpts {
            tau: self.tau,
            max_iters: self.max_iters,
            gap_tol: self.gap_tol,
        }
    }
}

#[derive(Args, Debug)]
struct OutArgs {
    /// Output directory.
    #[arg(long, default_value = "tvgeo-out")]
    out: PathBuf,
    /// Omit the timestamp comment from SVG files.
    #[arg(long)]
    no_timestamp: bool,
    /// Write plain (P2) instead of binary (P5) PGM files.
    #[arg(long)]
    plain_pgm: bool,
}

impl OutArgs {
    fn output(&self) -> Output {
        Output {
            dir: self.out.clone(),
            timestamp: !self.no_timestamp,
            plain_pgm: self.plain_pgm,
        }
    }
}

#[derive(Args, Debug)]
struct DenoiseArgs {
    /// Shape spec (e.g. "disc 0.5 0.5 0.25") or a file holding one.
    #[arg(long, conflicts_with = "input", required_unless_present = "input")]
    shape: Option<String>,
    /// Input image (PGM) instead of a shape.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Grid side for shapes.
    #[arg(long, default_value_t = 128)]
    n: usize,
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Tube radii for inside/outside variation (shape inputs only).
    #[arg(long = "tube-r")]
    tube_r: Vec<f64>,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    shape: String,
    #[arg(long, default_value_t = 128)]
    n: usize,
    /// Repeatable; sorted into decreasing order.
    #[arg(long = "lambda")]
    lambdas: Vec<f64>,
    /// Saturation threshold for the support map.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    eps_sat: f64,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct CertifyArgs {
    #[arg(long)]
    shape: String,
    #[arg(long, default_value_t = 256)]
    n: usize,
    #[arg(long)]
    lambda: f64,
    /// Fail (exit 1) when the relative L1 error exceeds this.
    #[arg(long)]
    max_rel_l1: Option<f64>,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct StabilityArgs {
    #[arg(long)]
    shape: String,
    #[arg(long, default_value_t = 256)]
    n: usize,
    #[arg(long = "lambda")]
    lambdas: Vec<f64>,
    #[arg(long = "sigma")]
    sigmas: Vec<f64>,
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    #[arg(long = "tube-r")]
    tube_r: Vec<f64>,
    /// Write a level-line SVG per run.
    #[arg(long)]
    svg: bool,
    /// Fail (exit 1) unless every hypothesis-satisfied run is contained.
    #[arg(long)]
    require_containment: bool,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    out: OutArgs,
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Denoise(a) => {
            let s = commands::denoise(&DenoiseOpts {
                shape: a.shape,
                input: a.input,
                n: a.n,
                lambda: a.lambda,
                sigma: a.sigma,
                seed: a.seed,
                solve: a.solver.opts(),
                tube_r: a.tube_r,
                out: a.out.output(),
            })?;
            if let Some(msg) = s.notice {
                eprintln!("notice: {msg}");
            }
            if let Some(r) = &s.result {
                if !r.converged {
                    eprintln!(
                        "warning: gap tolerance not reached in {} iterations",
                        r.iters
                    );
                }
            }
            Ok(true)
        }
        Command::Sweep(a) => {
            let s = commands::sweep(&SweepOpts {
                shape: a.shape,
                n: a.n,
                lambdas: a.lambdas,
                solve: a.solver.opts(),
                eps_sat: a.eps_sat,
                out: a.out.output(),
            })?;
            if let Some(slope) = s.norm_slope() {
                println!(
                    "norm slope {slope:.4}, max relative difference {:.4}",
                    s.max_pairwise()
                );
            }
            Ok(true)
        }
        Command::Certify(a) => {
            let s = commands::certify(&CertifyOpts {
                shape: a.shape,
                n: a.n,
                lambda: a.lambda,
                solve: a.solver.opts(),
                max_rel_l1: a.max_rel_l1,
                out: a.out.output(),
            })?;
            println!(
                "cheeger radius {:.6}, relative L1 error {:.4}",
                s.cheeger_radius, s.rel_l1
            );
            Ok(s.passed)
        }
        Command::Stability(a) => {
            let s = commands::stability(&StabilityOpts {
                shape: a.shape,
                n: a.n,
                lambdas: a.lambdas,
                sigmas: a.sigmas,
                seeds: a.seeds,
                tube_r: a.tube_r,
                solve: a.solver.opts(),
                svg: a.svg,
                require_containment: a.require_containment,
                out: a.out.output(),
            })?;
            match s.report.containment_rate() {
                Some(rate) => println!(
                    "containment among hypothesis-satisfied runs: {:.1}%",
                    100.0 * rate
                ),
                None => println!("no run satisfied the hypothesis"),
            }
            Ok(s.passed)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("asserted properties failed");
            ExitCode::FAILURE
        }
        Err(e @ CliError::Usage(_)) => {
            eprintln!("tvgeo: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("tvgeo: {e}");
            ExitCode::FAILURE
        }
    }
}
