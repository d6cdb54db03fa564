//! Seeded Monte Carlo experiments, estimation runs on flat files, and the
//! verification suites.

pub mod config;
pub mod experiment;
pub mod record;
pub mod rng;
pub mod suites;

pub use config::{ExperimentConfig, LambdaMode, Mode};
pub use experiment::{run_experiment, ExperimentOutput};
pub use record::{Summary, TrialRecord, COLUMNS, SCHEMA_LINE};
pub use rng::trial_rng;
pub use suites::{verify_suite, SuiteReport, VerifyOptions, SUITES};
