//! Evaluation metrics and comparison tables.
//!
//! MAPE, R² and adjusted R² are reported on a percent scale. Values that are
//! undefined for a given input (MAPE with a zero target, R² with constant
//! targets, adjusted R² with `n ≤ k + 1`) are `None` rather than errors.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mae: f64,
    pub rmse: f64,
    pub mape_percent: Option<f64>,
    pub r2_percent: Option<f64>,
    pub adj_r2_percent: Option<f64>,
    pub n: usize,
    /// Predictor count used by the adjustment.
    pub k: usize,
}

pub fn evaluate(y: &[f64], yhat: &[f64], k: usize) -> Result<MetricsReport> {
    if y.len() != yhat.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            got: yhat.len(),
        });
    }
    let n = y.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "metrics need at least 2 observations, got {n}"
        )));
    }
    let nf = n as f64;
    let abs_err: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b).abs()).sum();
    let sse: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum();
    let mean = y.iter().sum::<f64>() / nf;
    let sst: f64 = y.iter().map(|a| (a - mean) * (a - mean)).sum();

    let mape_percent = if y.contains(&0.0) {
        None
    } else {
        let rel: f64 = y.iter().zip(yhat).map(|(a, b)| ((a - b) / a).abs()).sum();
        Some(100.0 * rel / nf)
    };
    let r2 = (sst > 0.0).then(|| 1.0 - sse / sst);
    let adj = r2
        .filter(|_| n > k + 1)
        .map(|r2| 1.0 - (1.0 - r2) * (nf - 1.0) / (nf - k as f64 - 1.0));
    Ok(MetricsReport {
        mae: abs_err / nf,
        rmse: (sse / nf).sqrt(),
        mape_percent,
        r2_percent: r2.map(|v| 100.0 * v),
        adj_r2_percent: adj.map(|v| 100.0 * v),
        n,
        k,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub model: String,
    /// `None` renders as a failed row.
    pub metrics: Option<MetricsReport>,
}

impl TableRow {
    pub fn new(model: impl Into<String>, metrics: MetricsReport) -> Self {
        Self {
            model: model.into(),
            metrics: Some(metrics),
        }
    }

    pub fn failed(model: impl Into<String>) -> Self {
        Self {
            model: model.into(),
            metrics: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonTable {
    pub text: String,
    pub csv: String,
}

pub const CSV_HEADER: &str = "model,mae,rmse,mape,r2,adj_r2";

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.2}"))
}

fn cells(m: &Option<MetricsReport>) -> [String; 5] {
    match m {
        Some(m) => [
            cell(Some(m.mae)),
            cell(Some(m.rmse)),
            cell(m.mape_percent),
            cell(m.r2_percent),
            cell(m.adj_r2_percent),
        ],
        None => std::array::from_fn(|_| "failed".to_string()),
    }
}

/// Fixed-width text plus CSV, rows in the given order, two decimals.
pub fn comparison_table(rows: &[TableRow]) -> ComparisonTable {
    let width = rows
        .iter()
        .map(|r| r.model.len())
        .chain(std::iter::once("Model".len()))
        .max()
        .unwrap_or(5);
    let mut text = String::new();
    let _ = writeln!(
        text,
        "{:<width$}  {:>8}  {:>8}  {:>8}  {:>8}  {:>8}",
        "Model", "MAE", "RMSE", "MAPE", "R²", "Adj(R²)"
    );
    let mut csv = String::new();
    let _ = writeln!(csv, "{CSV_HEADER}");
    for row in rows {
        let c = cells(&row.metrics);
        let _ = writeln!(
            text,
            "{:<width$}  {:>8}  {:>8}  {:>8}  {:>8}  {:>8}",
            row.model, c[0], c[1], c[2], c[3], c[4]
        );
        let name = if row.model.contains([',', '"']) {
            format!("\"{}\"", row.model.replace('"', "\"\""))
        } else {
            row.model.clone()
        };
        let _ = writeln!(csv, "{name},{}", c.join(","));
    }
    ComparisonTable { text, csv }
}
