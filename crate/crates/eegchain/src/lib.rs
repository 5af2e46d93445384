//! File formats, experiment runners and the command-line front end for
//! `eegchain-core`.
//!
//! * [`csv`]: `safe-csv-1` recordings, exact on round trip;
//! * [`capture`]: binary packet captures;
//! * [`triggers`]: two-column trigger lists;
//! * [`config`]: TOML experiment and device configuration;
//! * [`experiment`]: the sine-sweep and VEP runs and on-disk re-analysis;
//! * [`report`]: report tables and their text summaries.

pub mod capture;
pub mod config;
pub mod csv;
pub mod error;
pub mod experiment;
pub mod report;
pub mod triggers;

pub use config::{ExperimentConfig, Preset};
pub use error::{Error, Result};
pub use experiment::{analyze, run_sine_experiment, run_vep_experiment};
