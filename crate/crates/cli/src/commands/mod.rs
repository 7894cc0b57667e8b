//! The `fit`, `simulate` and `diagnose` commands.

mod diagnose;
mod fit;
mod simulate;

pub use diagnose::{cmd_diagnose, load_run, DiagnoseReport, LoadedRun};
pub use fit::{cmd_fit, compute_diagnostics, Diagnostics, FitReport, RunManifest};
pub use simulate::{cmd_simulate, GridFile, SimulateArgs};

/// Artifact names inside a run directory.
pub const DRAWS_CSV: &str = "draws.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const LOGLIK_CSV: &str = "loglik.csv";
pub const MANIFEST_JSON: &str = "run-manifest.json";
pub const HAZARD_CSV: &str = "hazard.csv";
pub const ETA_INTERVALS_CSV: &str = "eta_intervals.csv";

/// Stream purposes under the run seed.
pub(crate) const STREAM_CHAIN: u64 = 0;
pub(crate) const STREAM_FIT_DIAGNOSTICS: u64 = 1;
pub(crate) const STREAM_DIAGNOSE: u64 = 2;
