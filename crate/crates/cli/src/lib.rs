//! Experiment harness: JSON configs, single runs, parameter sweeps and trace
//! diagnostics on top of `sstac-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diag;
pub mod error;
pub mod run;
pub mod sweep;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
pub use run::{cli_run, run_one, Manifest, RunOutput};
pub use sweep::{cli_sweep, SweepParam};
