//! Experiment orchestration: configuration, seeded Monte Carlo sweeps and
//! CSV output. Every realization draws from its own counter-based stream,
//! so results do not depend on how work is scheduled.

mod bench;
mod ber;
mod config;
mod outage;
mod pdf;
mod result;
mod selftest;

pub use bench::{
    bench_compare_detailed, bench_rows, run_bench_compare, BenchPoint, BerEstimate, OrderingVerdict, EXPERIMENT_BENCH,
};
pub use ber::{ber_sweep_detailed, receiver_paths, run_ber_sweep, BerPoint, CurveStats, EXPERIMENT_BER};
pub use config::{
    csi_name, parse_csi, parse_snr_grid, EqualizerChoice, OutageEstimator, RegimeChoice, SystemConfig, DEFAULT_SEED,
};
pub use outage::{
    analytical_outage, conditional_outage, outage_query, outage_sweep_detailed, run_outage_sweep, OutagePoint,
    EXPERIMENT_OUTAGE,
};
pub use pdf::{pdf_histogram_detailed, run_pdf_histogram, PdfHistogram, DEFAULT_BINS, EXPERIMENT_PDF};
pub use result::{proportion_ci, SweepResult, SweepRow, CSV_HEADER};
pub use selftest::{selftest, SelfCheck};

use crate::error::{invalid, Result};

/// Runs `f` on a dedicated pool of `workers` threads, or on the global pool.
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match workers {
        None => Ok(f()),
        Some(0) => invalid("worker count must be positive"),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| crate::Error::InvalidArgument(format!("cannot start worker pool: {e}"))),
    }
}
