//! A fitted model of any kind, and its on-disk JSON envelope
//! `{format_version, kind, schema, payload}`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{fit_ols, fit_pls, fit_stepwise, LinearModel};
use crate::dataset::{Dataset, Table};
use crate::error::{Error, Result};
use crate::hybrid::{fit_hybrid, HybridConfig, HybridModel};
use crate::mlp::{fit_mlp, MlpConfig, MlpModel};
use crate::tree::{fit_tree, SelectionRule, TreeConfig, TreeModel};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Ols,
    Stepwise,
    Pls,
    Tree,
    Mlp,
    Hybrid,
}

impl ModelKind {
    /// Comparison-table order.
    pub const ALL: [ModelKind; 6] = [
        Self::Ols,
        Self::Stepwise,
        Self::Pls,
        Self::Tree,
        Self::Mlp,
        Self::Hybrid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Ols => "ols",
            Self::Stepwise => "stepwise",
            Self::Pls => "pls",
            Self::Tree => "tree",
            Self::Mlp => "mlp",
            Self::Hybrid => "hybrid",
        }
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown model kind '{s}' (expected one of hybrid, tree, mlp, ols, stepwise, pls)"
                ))
            })
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Settings shared by every model kind.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelOptions {
    pub tree: TreeConfig,
    pub mlp: MlpConfig,
    pub selection: SelectionRule,
    /// Defaults to `min(2, p)`.
    pub pls_components: Option<usize>,
}

impl ModelOptions {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.tree.seed = seed;
        self.mlp.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Ols(LinearModel),
    Stepwise(LinearModel),
    Pls(LinearModel),
    Tree(TreeModel),
    Mlp(MlpModel),
    Hybrid(HybridModel),
}

pub fn fit_model(kind: ModelKind, ds: &Dataset, opts: &ModelOptions) -> Result<Model> {
    Ok(match kind {
        ModelKind::Ols => Model::Ols(fit_ols(ds)?),
        ModelKind::Stepwise => Model::Stepwise(fit_stepwise(ds)?),
        ModelKind::Pls => {
            let a = opts.pls_components.unwrap_or_else(|| ds.p().min(2));
            Model::Pls(fit_pls(ds, a)?)
        }
        ModelKind::Tree => Model::Tree(fit_tree(ds, &opts.tree)?),
        ModelKind::Mlp => Model::Mlp(fit_mlp(ds, &opts.mlp)?),
        ModelKind::Hybrid => Model::Hybrid(fit_hybrid(
            ds,
            &HybridConfig {
                tree: opts.tree.clone(),
                mlp: opts.mlp.clone(),
                selection: opts.selection,
            },
        )?),
    })
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Ols(_) => ModelKind::Ols,
            Model::Stepwise(_) => ModelKind::Stepwise,
            Model::Pls(_) => ModelKind::Pls,
            Model::Tree(_) => ModelKind::Tree,
            Model::Mlp(_) => ModelKind::Mlp,
            Model::Hybrid(_) => ModelKind::Hybrid,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            Model::Ols(m) | Model::Stepwise(m) | Model::Pls(m) => m.coefficients.len(),
            Model::Tree(m) => m.n_features(),
            Model::Mlp(m) => m.input_dim,
            Model::Hybrid(m) => m.n_features(),
        }
    }

    /// Independent variables the model actually consumes; the `k` of
    /// adjusted R².
    pub fn predictor_count(&self) -> usize {
        match self {
            Model::Ols(m) | Model::Pls(m) => m.coefficients.len(),
            Model::Stepwise(m) => m.used_features.len(),
            Model::Tree(m) => m.importance.iter().filter(|v| **v > 0.0).count(),
            Model::Mlp(m) => m.input_dim,
            Model::Hybrid(m) => m.selected.len(),
        }
    }

    pub fn response_bound(&self) -> f64 {
        match self {
            Model::Ols(m) | Model::Stepwise(m) | Model::Pls(m) => m.response_bound,
            Model::Tree(m) => m.response_bound,
            Model::Mlp(m) => m.response_bound,
            Model::Hybrid(m) => m.response_bound,
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        match self {
            Model::Ols(m) | Model::Stepwise(m) | Model::Pls(m) => m.predict(x),
            Model::Tree(m) => m.predict(x),
            Model::Mlp(m) => m.predict(x),
            Model::Hybrid(m) => m.predict(x),
        }
    }

    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<f64>> {
        ds.rows().map(|r| self.predict(r)).collect()
    }

    /// Wraps the model with the column names it was trained on (features,
    /// then target).
    pub fn to_file(&self, schema: Vec<String>) -> Result<ModelFile> {
        if schema.len() != self.n_features() + 1 {
            return Err(Error::Schema(format!(
                "model takes {} features but schema lists {} columns",
                self.n_features(),
                schema.len()
            )));
        }
        let payload = match self {
            Model::Ols(m) | Model::Stepwise(m) | Model::Pls(m) => serde_json::to_value(m)?,
            Model::Tree(m) => serde_json::to_value(m)?,
            Model::Mlp(m) => serde_json::to_value(m)?,
            Model::Hybrid(m) => serde_json::to_value(m)?,
        };
        Ok(ModelFile {
            format_version: FORMAT_VERSION,
            kind: self.kind().name().to_string(),
            schema,
            payload,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub kind: String,
    /// Feature column names followed by the target name.
    pub schema: Vec<String>,
    pub payload: serde_json::Value,
}

impl ModelFile {
    pub fn feature_names(&self) -> &[String] {
        &self.schema[..self.schema.len().saturating_sub(1)]
    }

    pub fn target_name(&self) -> Option<&str> {
        self.schema.last().map(String::as_str)
    }

    /// Picks the model's feature columns out of `table` by name, in schema
    /// order. The target column may be present and is ignored; any other
    /// column the model does not know is an error.
    pub fn feature_rows(&self, table: &Table) -> Result<Vec<Vec<f64>>> {
        let features = self.feature_names();
        let positions = features
            .iter()
            .map(|name| {
                table
                    .headers
                    .iter()
                    .position(|h| h == name)
                    .ok_or_else(|| Error::Schema(format!("missing column '{name}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(extra) = table
            .headers
            .iter()
            .find(|h| !features.contains(h) && Some(h.as_str()) != self.target_name())
        {
            return Err(Error::Schema(format!("unexpected column '{extra}'")));
        }
        Ok(table
            .rows
            .iter()
            .map(|row| positions.iter().map(|&c| row[c]).collect())
            .collect())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        // Check the version before trusting the rest of the layout.
        let raw: serde_json::Value = serde_json::from_str(text)?;
        let version = raw
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::Schema("model file lacks format_version".into()))?;
        if version > FORMAT_VERSION as u64 {
            return Err(Error::UnsupportedVersion {
                found: version.min(u32::MAX as u64) as u32,
                supported: FORMAT_VERSION,
            });
        }
        Ok(serde_json::from_value(raw)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn into_model(self) -> Result<Model> {
        let kind: ModelKind = self.kind.parse()?;
        let model = match kind {
            ModelKind::Ols => Model::Ols(serde_json::from_value(self.payload)?),
            ModelKind::Stepwise => Model::Stepwise(serde_json::from_value(self.payload)?),
            ModelKind::Pls => Model::Pls(serde_json::from_value(self.payload)?),
            ModelKind::Tree => Model::Tree(serde_json::from_value(self.payload)?),
            ModelKind::Mlp => Model::Mlp(serde_json::from_value(self.payload)?),
            ModelKind::Hybrid => Model::Hybrid(serde_json::from_value(self.payload)?),
        };
        if model.n_features() + 1 != self.schema.len() {
            return Err(Error::Schema(format!(
                "payload takes {} features but schema lists {} columns",
                model.n_features(),
                self.schema.len()
            )));
        }
        Ok(model)
    }
}
