//! Side-by-side comparison of every model kind under one split plan.

use rayon::prelude::*;

use crate::dataset::{Dataset, SplitPlan};
use crate::error::{Error, Result};
use crate::metrics::{comparison_table, evaluate, ComparisonTable, MetricsReport, TableRow};
use crate::model::{fit_model, Model, ModelKind, ModelOptions};

/// Printed under every benchmark table.
pub const MARS_NOTE: &str =
    "note: MARS is not included (no reference algorithm); six models are compared.";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Protocol {
    Holdout { test_fraction: f64 },
    KFold { folds: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutcome {
    pub kind: ModelKind,
    pub in_sample: Option<MetricsReport>,
    pub holdout: Option<MetricsReport>,
    /// First error message when the model could not be fitted or scored.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub protocol: Protocol,
    pub seed: u64,
    /// One entry per [`ModelKind::ALL`], in that order.
    pub outcomes: Vec<ModelOutcome>,
}

impl BenchmarkReport {
    pub fn outcome(&self, kind: ModelKind) -> &ModelOutcome {
        self.outcomes
            .iter()
            .find(|o| o.kind == kind)
            .expect("every kind is benchmarked")
    }

    fn rows(&self, pick: impl Fn(&ModelOutcome) -> &Option<MetricsReport>) -> Vec<TableRow> {
        self.outcomes
            .iter()
            .map(|o| TableRow {
                model: o.kind.name().to_string(),
                metrics: pick(o).clone(),
            })
            .collect()
    }

    pub fn in_sample_table(&self) -> ComparisonTable {
        comparison_table(&self.rows(|o| &o.in_sample))
    }

    pub fn holdout_table(&self) -> ComparisonTable {
        comparison_table(&self.rows(|o| &o.holdout))
    }
}

fn score(model: &Model, ds: &Dataset) -> Result<MetricsReport> {
    let yhat = model.predict_dataset(ds)?;
    evaluate(ds.targets(), &yhat, model.predictor_count())
}

fn run_holdout(
    kind: ModelKind,
    ds: &Dataset,
    plan: &SplitPlan,
    opts: &ModelOptions,
) -> Result<(MetricsReport, MetricsReport)> {
    let train = ds.subset(&plan.train_indices)?;
    let test = ds.subset(&plan.test_indices)?;
    let model = fit_model(kind, &train, opts)?;
    Ok((score(&model, &train)?, score(&model, &test)?))
}

fn run_kfold(
    kind: ModelKind,
    ds: &Dataset,
    plans: &[SplitPlan],
    opts: &ModelOptions,
) -> Result<(MetricsReport, MetricsReport)> {
    let full = fit_model(kind, ds, opts)?;
    let in_sample = score(&full, ds)?;
    let mut oof = vec![0.0; ds.n()];
    let mut k_sum = 0;
    for plan in plans {
        let train = ds.subset(&plan.train_indices)?;
        let model = fit_model(kind, &train, opts)?;
        k_sum += model.predictor_count();
        for &i in &plan.test_indices {
            oof[i] = model.predict(ds.row(i))?;
        }
    }
    let k = (k_sum as f64 / plans.len() as f64).round() as usize;
    Ok((in_sample, evaluate(ds.targets(), &oof, k)?))
}

/// Fits all six model kinds under identical splits and seeds. A model that
/// fails is reported as such without stopping the others.
pub fn run_benchmark(
    ds: &Dataset,
    protocol: Protocol,
    seed: u64,
    opts: &ModelOptions,
) -> Result<BenchmarkReport> {
    let opts = opts.clone().with_seed(seed);
    let plans = match protocol {
        Protocol::Holdout { test_fraction } => {
            vec![SplitPlan::holdout(ds.n(), test_fraction, seed)?]
        }
        Protocol::KFold { folds } => SplitPlan::kfold(ds.n(), folds, seed)?,
    };
    if plans.is_empty() {
        return Err(Error::InvalidArgument("no splits to evaluate".into()));
    }
    let outcomes = ModelKind::ALL
        .par_iter()
        .map(|&kind| {
            let result = match protocol {
                Protocol::Holdout { .. } => run_holdout(kind, ds, &plans[0], &opts),
                Protocol::KFold { .. } => run_kfold(kind, ds, &plans, &opts),
            };
            match result {
                Ok((in_sample, holdout)) => ModelOutcome {
                    kind,
                    in_sample: Some(in_sample),
                    holdout: Some(holdout),
                    error: None,
                },
                Err(e) => ModelOutcome {
                    kind,
                    in_sample: None,
                    holdout: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(BenchmarkReport {
        protocol,
        seed,
        outcomes,
    })
}
