//! Parallel execution of stability cells.

use rayon::prelude::*;
use tvgeo_core::certify::{StabilityPlan, StabilityReport};

use crate::error::{CliError, Result};

pub const THREADS_ENV: &str = "TVGEO_THREADS";

/// Thread pool capped by `TVGEO_THREADS` when set.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let k: usize = v.trim().parse().ok().filter(|&k| k > 0).ok_or_else(|| {
            CliError::Usage(format!(
                "{THREADS_ENV} must be a positive integer, got {v:?}"
            ))
        })?;
        builder = builder.num_threads(k);
    }
    Ok(builder.build()?)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub lambda: f64,
    pub sigma: f64,
    pub seed: u64,
}

pub fn cells(lambdas: &[f64], sigmas: &[f64], seeds: &[u64]) -> Vec<Cell> {
    let mut out = Vec::with_capacity(lambdas.len() * sigmas.len() * seeds.len());
    for &lambda in lambdas {
        for &sigma in sigmas {
            for &seed in seeds {
                out.push(Cell {
                    lambda,
                    sigma,
                    seed,
                });
            }
        }
    }
    out
}

/// Runs every cell; failed cells are returned next to the (sorted) report
/// of the successful ones.
pub fn run_cells(
    plan: &StabilityPlan,
    cells: &[Cell],
    pool: &rayon::ThreadPool,
) -> (StabilityReport, Vec<(Cell, tvgeo_core::Error)>) {
    let results: Vec<_> = pool.install(|| {
        cells
            .par_iter()
            .map(|c| (*c, plan.run_cell(c.lambda, c.sigma, c.seed)))
            .collect()
    });
    let mut report = StabilityReport::default();
    let mut failures = Vec::new();
    for (c, r) in results {
        match r {
            Ok(recs) => report.records.extend(recs),
            Err(e) => failures.push((c, e)),
        }
    }
    report.sort();
    (report, failures)
}
