//! Tree-then-network pipeline.
//!
//! 1. Fit a regression tree on all features.
//! 2. Keep the features the tree selects (all of them, flagged, if none).
//! 3. Append the tree's in-sample prediction as one more column.
//! 4. Fit the bounded network on the `m + 1` augmented inputs.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::mlp::{fit_mlp, MlpConfig, MlpModel};
use crate::tree::{fit_tree, select_features, SelectionRule, TreeConfig, TreeModel};

/// Column name given to the tree prediction in the augmented inputs.
pub const TREE_OUTPUT_COLUMN: &str = "tree_output";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct HybridConfig {
    pub tree: TreeConfig,
    pub mlp: MlpConfig,
    pub selection: SelectionRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridModel {
    pub feature_names: Vec<String>,
    /// Network inputs, most important first.
    pub selected: Vec<usize>,
    /// The tree selected nothing and every feature was used instead.
    pub fallback: bool,
    pub tree: TreeModel,
    pub mlp: MlpModel,
    pub response_bound: f64,
}

impl HybridModel {
    pub fn from_parts(
        feature_names: Vec<String>,
        selected: Vec<usize>,
        fallback: bool,
        tree: TreeModel,
        mlp: MlpModel,
    ) -> Result<Self> {
        let p = feature_names.len();
        if tree.n_features() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: tree.n_features(),
            });
        }
        if let Some(&j) = selected.iter().find(|&&j| j >= p) {
            return Err(Error::InvalidArgument(format!(
                "selected feature {j} out of range for {p} features"
            )));
        }
        if mlp.input_dim != selected.len() + 1 {
            return Err(Error::DimensionMismatch {
                expected: selected.len() + 1,
                got: mlp.input_dim,
            });
        }
        let response_bound = mlp.response_bound;
        Ok(Self {
            feature_names,
            selected,
            fallback,
            tree,
            mlp,
            response_bound,
        })
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// `d_m`: selected features plus the tree output.
    pub fn input_dim(&self) -> usize {
        self.mlp.input_dim
    }

    /// Selected entries of `x_raw` in selection order, then the tree prediction.
    pub fn augment(&self, x_raw: &[f64]) -> Result<Vec<f64>> {
        let t = self.tree.predict(x_raw)?;
        Ok(self
            .selected
            .iter()
            .map(|&j| x_raw[j])
            .chain(std::iter::once(t))
            .collect())
    }

    pub fn predict(&self, x_raw: &[f64]) -> Result<f64> {
        if x_raw.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                got: x_raw.len(),
            });
        }
        let k = self.response_bound;
        Ok(self.mlp.predict(&self.augment(x_raw)?)?.clamp(-k, k))
    }
}

/// Builds the augmented training set `[selected columns | tree prediction]`.
fn augmented_dataset(ds: &Dataset, tree: &TreeModel, selected: &[usize]) -> Result<Dataset> {
    let width = selected.len() + 1;
    let mut features = Vec::with_capacity(ds.n() * width);
    for row in ds.rows() {
        features.extend(selected.iter().map(|&j| row[j]));
        features.push(tree.route(row).0);
    }
    let names = selected
        .iter()
        .map(|&j| ds.feature_names()[j].clone())
        .chain(std::iter::once(TREE_OUTPUT_COLUMN.to_string()))
        .collect();
    ds.with_features(names, features, width)
}

pub fn fit_hybrid(ds: &Dataset, cfg: &HybridConfig) -> Result<HybridModel> {
    if ds.n() < 2 {
        return Err(Error::InvalidArgument(format!(
            "hybrid fit needs at least 2 rows, got {}",
            ds.n()
        )));
    }
    let tree = fit_tree(ds, &cfg.tree)?;
    let mut selected = select_features(&tree, cfg.selection).indices;
    let fallback = selected.is_empty();
    if fallback {
        selected = (0..ds.p()).collect();
    }
    let augmented = augmented_dataset(ds, &tree, &selected)?;
    let mlp = fit_mlp(&augmented, &cfg.mlp)?;
    Ok(HybridModel {
        feature_names: ds.feature_names().to_vec(),
        selected,
        fallback,
        tree,
        mlp,
        response_bound: ds.response_bound(),
    })
}

pub fn predict_hybrid(model: &HybridModel, x_raw: &[f64]) -> Result<f64> {
    model.predict(x_raw)
}

/// Plain-text summary of what the pipeline selected and built.
pub fn explain(model: &HybridModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "hybrid regression tree + network");
    if model.fallback {
        let _ = writeln!(out, "fallback: no informative split; all features used");
    }
    let _ = writeln!(out, "selected features ({}):", model.selected.len());
    for (rank, &j) in model.selected.iter().enumerate() {
        let _ = writeln!(
            out,
            "  {:>2}. {:<24} importance {:.6}",
            rank + 1,
            model.feature_names[j],
            model.tree.importance[j]
        );
    }
    let _ = writeln!(out, "tree leaves: {}", model.tree.leaf_count);
    let _ = writeln!(out, "network inputs d_m: {}", model.mlp.input_dim);
    let _ = writeln!(out, "hidden units k: {}", model.mlp.hidden_count());
    let _ = writeln!(out, "output weight bound beta: {:.6}", model.mlp.beta);
    let _ = writeln!(out, "training risk: {:.6}", model.mlp.training_risk);
    out
}
