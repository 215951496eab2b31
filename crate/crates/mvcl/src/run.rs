use std::time::Instant;

use mvcl_core::eval::{assemble, run_repeat};
use mvcl_core::optim::Clock;
use mvcl_core::{BenchmarkConfig, BenchmarkReport, HyperParams, MultiViewDataset, SplitPlan};
use rayon::prelude::*;

use crate::error::{Error, Result};

pub const THREADS_ENV: &str = "MVCL_THREADS";

/// Milliseconds since construction.
#[derive(Debug, Clone, Copy)]
pub struct SystemClock(Instant);

impl SystemClock {
    pub fn new() -> Self {
        Self(Instant::now())
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        self.0.elapsed().as_millis() as u64
    }
}

/// Worker cap from `MVCL_THREADS`; 0 or unset lets rayon decide.
pub fn threads_from_env() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| Error::Usage(format!("{} must be a non-negative integer, got {:?}", THREADS_ENV, v))),
        Err(_) => Ok(0),
    }
}

/// Runs the repeats in parallel. Every repeat is self-contained and the
/// report is assembled in repeat order, so the result does not depend on
/// the thread count.
pub fn benchmark(ds: &MultiViewDataset, cfg: &BenchmarkConfig, plan: &SplitPlan, threads: usize) -> Result<BenchmarkReport> {
    plan.validate()?;
    ds.labels().ok_or(mvcl_core::Error::LabelsRequired)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| Error::Usage(e.to_string()))?;
    let outcomes = pool.install(|| {
        (0..plan.repeats).into_par_iter().map(|r| run_repeat(ds, cfg, plan, r, &SystemClock::new())).collect::<Vec<_>>()
    });
    let outcomes = outcomes.into_iter().collect::<mvcl_core::Result<Vec<_>>>()?;
    Ok(assemble(ds, cfg, plan, outcomes)?)
}

/// The configured run and its sample-level-only twin on the same splits.
pub fn ablation(ds: &MultiViewDataset, cfg: &BenchmarkConfig, plan: &SplitPlan, threads: usize) -> Result<(BenchmarkReport, BenchmarkReport)> {
    let full = benchmark(ds, cfg, plan, threads)?;
    let mut cmc = cfg.clone();
    cmc.train.hp = HyperParams { alpha: 0.0, beta: 0.0, ..cfg.train.hp };
    let base = benchmark(ds, &cmc, plan, threads)?;
    Ok((full, base))
}
