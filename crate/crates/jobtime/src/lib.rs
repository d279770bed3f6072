//! Execution-time prediction for MapReduce and Tez jobs.
//!
//! Predicts job durations from job-profile features (task counts, per-phase
//! timing statistics, shuffle volume, dataset size, and an engineered core
//! feature) using ordinary least squares and ε-Support-Vector-Regression
//! with linear, polynomial, and Gaussian kernels. Experiment runners cover
//! same-query validation, core-count holdout (extrapolation vs.
//! interpolation), cross-query prediction, and feature-weight reporting,
//! with hyperparameters selected by grid search on a cross-validation slice.

// `!(x > 0.0)`-style comparisons are deliberate: they reject NaN along with
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod features;
pub mod linreg;
pub mod pipeline;
pub mod report;
pub mod svr;
pub mod synth;
