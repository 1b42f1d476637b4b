//! Hybrid regression-tree / neural-network regression.
//!
//! A CART-style regression tree is grown on the full feature set. The features
//! it actually splits on are kept, the tree's own prediction is appended as one
//! more input, and a one-hidden-layer sigmoid network with an ℓ1 bound on its
//! output weights is trained on the result by minimizing empirical squared
//! risk.
//!
//! Alongside the hybrid model the crate ships the pieces needed to compare and
//! study it:
//!
//! - [`dataset`]: CSV ingestion, synthetic generators, standardization, splits.
//! - [`tree`]: the regression tree, feature importance and selection, leaf-budget schedules.
//! - [`mlp`]: the bounded-output-weight network and its exact risk gradient.
//! - [`hybrid`]: the two-stage pipeline.
//! - [`baselines`]: least squares, forward-AIC stepwise and PLS (NIPALS).
//! - [`metrics`]: MAE, RMSE, MAPE, R², adjusted R² and comparison tables.
//! - [`consistency`]: risk-versus-sample-size sweeps under capacity schedules.
//! - [`model`] and [`benchmark`]: persisted model files and paired model comparisons.
//!
//! Every fitted model clamps its predictions to the dataset's response bound
//! `[-K, K]`.

pub mod baselines;
pub mod benchmark;
pub mod consistency;
pub mod dataset;
pub mod error;
pub mod hybrid;
pub mod metrics;
pub mod mlp;
pub mod model;
pub mod tree;

pub use baselines::{fit_ols, fit_pls, fit_stepwise, LinearModel};
pub use benchmark::{run_benchmark, BenchmarkReport, ModelOutcome, Protocol, MARS_NOTE};
pub use consistency::{
    run_mlp_sweep, run_tree_sweep, SweepRecord, SweepResult, SweepSpec, Verdict,
};
pub use dataset::{
    efficiency, load_csv, load_table, split, standardize, synthesize, write_csv, Dataset,
    Generator, SplitPlan, Standardization, SynthSpec, Table,
};
pub use error::{Error, Result};
pub use hybrid::{explain, fit_hybrid, predict_hybrid, HybridConfig, HybridModel};
pub use metrics::{comparison_table, evaluate, ComparisonTable, MetricsReport, TableRow};
pub use mlp::{
    fit_mlp, hidden_count_auto, predict_mlp, risk_gradient, sigmoid, HiddenCount, MlpConfig,
    MlpGradient, MlpModel, WeightBound,
};
pub use model::{fit_model, Model, ModelFile, ModelKind, ModelOptions};
pub use tree::{
    feature_importance, fit_tree, leaf_schedule, predict_tree, select_features, LeafSchedule,
    Selection, SelectionRule, TreeConfig, TreeModel, TreeNode,
};
