//! Random-order online learning through stable coreset sampling.
//!
//! Every online learner here follows the same recipe: at step `t` run an
//! offline approximation algorithm on a small weighted sample of the first
//! `t - 1` elements and commit to its answer. Because the sample changes little
//! when one element is added, consecutive answers stay close, which bounds
//! both the regret and the number of times the answer changes.
//!
//! * [`online`]: the driver, regret and inconsistency bookkeeping.
//! * [`coreset`] and [`sensitivity`]: generic sensitivity sampling and
//!   average-sensitivity measurement.
//! * [`clustering`], [`lowrank`], [`regression`]: the three instantiations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clustering;
pub mod coreset;
pub mod error;
pub mod linalg;
pub mod lowrank;
pub mod online;
pub mod regression;
pub mod rng;
pub mod sampling;
pub mod sensitivity;

pub use clustering::{
    dz_sampling, kz_loss, online_clustering, two_stage_coreset, weighted_kz_solve, CenterSet,
    ClusteringConfig, ClusteringCoreset, CoresetConstants,
};
pub use coreset::{
    coreset_loss, sensitivity_sample, SensitivityProfile, WeightNormalization, WeightedCoreset,
};
pub use error::{Error, Result};
pub use lowrank::{
    online_lowrank, pcp_sample, projection_loss, ridge_leverage_scores, top_k_left_singular,
    ColumnMatrix, ColumnSketch, LowRankConfig, Projector, SketchScaling,
};
pub use online::{
    epsilon_regret, inconsistency, random_order, run_online, Dataset, LossModel, OnlineReport,
    OnlineSolver, RegretLedger, RunOptions, Stream, UpdateMode,
};
pub use regression::{
    leverage_scores, online_regression, regression_loss, sketch_rows, sketched_solve, Observation,
    RegressionConfig, RowMatrix, RowSketch,
};
pub use rng::SeedStream;
pub use sampling::DrawScheme;
pub use sensitivity::{
    estimate_average_sensitivity, tv_distance, uniform_interval_tv, EstimationMode,
};
