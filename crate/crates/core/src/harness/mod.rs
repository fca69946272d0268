//! Monte Carlo sweeps, analytic tables and their on-disk formats.
//!
//! Every random draw comes from a stream keyed by
//! `(master_seed, point, trial)`, and trials are reduced in index order, so
//! results are identical for any thread count.

mod analytic;
mod ber;
mod mse;
mod plot;
mod records;
mod seeding;

pub use analytic::{run_bound, run_pep, run_rankscan, BoundRun, RankScanRun};
pub use ber::{run_ber_sweep, simulate_trial, BerRun, TrialSetup};
pub use mse::{run_mse_sweep, MseRun};
pub use plot::{plot_script, PlotKind};
pub use records::{
    write_ber_csv, write_bound_csv, write_histogram_csv, write_mse_csv, write_pep_csv, BerRecord,
    BoundRecord, MseRecord, PepRecord, RunMetadata,
};
pub use seeding::{stream_rng, stream_seed};

pub use crate::config::SystemConfig;

use crate::error::{invalid, Result};

/// Execution knobs that do not change the statistics of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Trials per batch between stopping-rule checks.
    pub batch: u64,
    /// Transmit without noise (debug aid; BER must then be zero).
    pub noiseless: bool,
    /// Report wall-clock times in CSV output (breaks byte-identical output).
    pub timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            threads: None,
            batch: 1000,
            noiseless: false,
            timing: false,
        }
    }
}

impl RunOptions {
    /// Runs `f` on a pool with the requested number of threads.
    pub fn install<T: Send>(&self, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
        if self.batch == 0 {
            return Err(invalid("batch size must be positive"));
        }
        match self.threads {
            None => f(),
            Some(0) => Err(invalid("thread count must be positive")),
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| invalid(e.to_string()))?
                .install(f),
        }
    }
}
