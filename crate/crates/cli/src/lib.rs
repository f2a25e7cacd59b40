//! Experiment harness behind the `esr-diag` binary.
//!
//! [`sweep`] runs batches of simulated acquisitions over a degradation axis
//! and writes tidy CSV and regression summaries, [`monitor`] turns a
//! directory of recorded frames into rolling health reports, and
//! [`variants`] compares the two ESR denominators against ground truth.

pub mod exit;
pub mod monitor;
pub mod sweep;
pub mod variants;

pub use exit::{exit_code, PartialFailure};
pub use sweep::{run_sweep, write_sweep, ExperimentSpec, SweepAxis, SweepReport};
