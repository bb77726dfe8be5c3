//! Configuration-driven case runner, error metric, CSV/JSON outputs and sweeps.

pub mod config;
pub mod metrics;
pub mod pipeline;
pub mod runner;
pub mod sweep;

pub use config::{ErrorNorm, ExperimentConfig, DEFAULT_N_FINE};
pub use metrics::{relative_error, relative_error_from_pairs};
pub use pipeline::{continuum_errors, evaluate, macro_solve, upscale, CaseContext, CaseResult, StageTiming, Upscaled};
pub use runner::{run_case, run_on_context, ErrorReport};
pub use sweep::{paper_grid, sweep, SweepOutcome};
