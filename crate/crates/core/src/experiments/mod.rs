//! Sweep engine behind the command-line tool.
//!
//! Each `run_*` function evaluates independent grid points in parallel and
//! assembles rows in grid order, so output is identical for any thread
//! count. A failing point fills its row with empty cells and records the
//! message in the `error` column instead of aborting the sweep.

mod config;
mod plot;
mod sweeps;
mod table;

pub use config::{lin_space, log_space, parse_pairs, LambdaSource, ScenarioConfig, KEYS};
pub use plot::plot_script;
pub use sweeps::{
    dominance_windows, grid_table, run_closed_form_report, run_compat_check, run_det_sweep,
    run_qfim_vs_gamma, run_ratio_sweep, run_thermometry, run_tilde_lambda_vs_time,
    run_wigner_snapshots, snapshot_table, validate, Check, DominanceWindow, ValidationReport,
    WignerSnapshot, THERMOMETRY_ANCHORS,
};
pub use table::{Cell, Column, OutputFormat, Provenance, ResultTable, TOOL_VERSION};

use crate::error::{Error, Result};

/// Run `f` on a pool of `threads` workers, or the available parallelism
/// when `None`.
pub fn with_threads<R, F>(threads: Option<usize>, f: F) -> Result<R>
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}
