//! Experiment harness for the online coreset learners: synthetic workloads,
//! stream orderings, hindsight oracles and CSV/JSON reporting.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiment;
pub mod generate;
pub mod oracle;
pub mod report;

pub use config::{Estimation, ExperimentConfig, Mode, Ordering, Problem, Sampler};
pub use error::HarnessError;
pub use experiment::{
    read_ledger, run_experiment, run_seed, LedgerRecord, SeedRun, Summary, SUMMARY_FILE,
};
pub use report::{sensitivity_report, write_sensitivity_report, SensitivityReport, REPORT_FILE};
