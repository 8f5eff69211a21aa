//! Penalized generalized-linear-model solution paths and tuning-parameter
//! selection by cross-validation.
//!
//! The crate fits lasso, SCAD and MCP paths for gaussian and binomial
//! responses by cyclic coordinate descent, and chooses the penalty level with
//! one of four selectors:
//!
//! * K-fold cross-validation (`kfold_cv` with the `Min` rule),
//! * K-fold with the one-standard-error rule (`OneSe`),
//! * Monte-Carlo leave-`n_v`-out cross-validation (`cv_nv`), which refits the
//!   winner by restricted maximum likelihood, and
//! * consistent cross-validation (`ccv`), which scores the path's active sets
//!   by split-wise restricted-MLE validation likelihood and refits the
//!   winner.
//!
//! A simulation harness reproduces selection-consistency benchmarks, and a
//! diagnostics module provides coherent-rate curves, the orthonormal
//! shrinkage decomposition, order-statistics probability estimates and
//! universal-threshold values. Run `cargo run --example` targets for guided
//! tours, or the `ccv` binary for the command-line interface.

#![allow(clippy::type_complexity)]
#![allow(clippy::too_many_arguments)]
// `!(x > 0.0)` rejects NaN as well as nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod cv;
pub mod data;
pub mod diagnostics;
pub mod error;
pub mod family;
pub mod io;
mod linalg;
pub mod path;
pub mod penalty;
pub mod restricted;

pub mod seed;
pub mod sim;

pub use data::{prediction_loss, ActiveSet, Dataset};
pub use error::{Error, Result};
pub use family::{neg_log_lik, Family, LossMetric};
pub use path::{
    active_set_sequence, fit_path, kkt_residual, lambda_grid, lambda_grid_with, FitOptions,
    LambdaGrid, SolutionPath,
};
pub use penalty::{PenaltyKind, PenaltySpec};
pub use cv::{
    ccv, cv_nv, kfold_cv, kfold_splits, monte_carlo_splits, select_active_set, CvCurve, CvOptions,
    SelectionReport, SelectionRule, SelectorMethod, SplitPlan,
};
pub use restricted::{default_size_cap, fit_restricted, RestrictedFit, RestrictedOptions};
pub use diagnostics::{
    coherent_rate, order_stats_probability, shrinkage_decomposition, theoretical_lambda_series,
    universal_threshold, CoherentRateSeries, RhoModel, ShrinkageDecomposition,
};
pub use sim::{gen_linear, gen_logistic, orthonormal_design, run_experiment, SimConfig, SparseBeta};
