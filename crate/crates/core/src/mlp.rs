//! One-hidden-layer sigmoid network with an ℓ1 bound on the output layer.
//!
//! The model computes `c0 + Σ_i c_i σ(a_i·z + b_i)` where `z` is the
//! standardized input. Training is full-batch gradient descent on the
//! empirical squared risk `(1/n) Σ (f(z_j) − y_j)²`; after every step the
//! output weights are scaled back onto `|c0| + Σ|c_i| ≤ β` when they leave it.
//!
//! Targets stay on their raw scale, so the hidden-layer step is divided by
//! the target variance. That is plain gradient descent on the risk of the
//! standardized targets, written in raw coordinates; without it a target
//! mean of ~15 saturates every hidden unit within a few epochs. When descent
//! stops, the output layer is replaced by its least-squares solution for the
//! trained hidden layer if that (after projection) lowers the risk.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Standardization};
use crate::error::{Error, Result};

/// Logistic squasher `1 / (1 + e^{-x})`, evaluated without overflow.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `max(1, round(√(n / (d_m ln n))))`, rounding half away from zero.
pub fn hidden_count_auto(n: usize, input_dim: usize) -> Result<usize> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "hidden width needs n >= 2, got {n}"
        )));
    }
    if input_dim == 0 {
        return Err(Error::InvalidArgument(
            "input dimension must be positive".into(),
        ));
    }
    let nf = n as f64;
    let k = (nf / (input_dim as f64 * nf.ln())).sqrt().round();
    Ok((k as usize).max(1))
}

/// `2 K ln n`.
pub fn beta_auto(n: usize, response_bound: f64) -> f64 {
    2.0 * response_bound * (n as f64).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HiddenCount {
    #[default]
    Auto,
    Fixed(usize),
}

impl FromStr for HiddenCount {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(Self::Auto);
        }
        match s.parse::<usize>() {
            Ok(k) if k > 0 => Ok(Self::Fixed(k)),
            _ => Err(Error::InvalidArgument(format!(
                "hidden count must be 'auto' or a positive integer, got '{s}'"
            ))),
        }
    }
}

impl fmt::Display for HiddenCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Auto => f.write_str("auto"),
            Self::Fixed(k) => write!(f, "{k}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum WeightBound {
    #[default]
    Auto,
    Fixed(f64),
}

impl FromStr for WeightBound {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(Self::Auto);
        }
        match s.parse::<f64>() {
            Ok(b) if b > 0.0 && b.is_finite() => Ok(Self::Fixed(b)),
            _ => Err(Error::InvalidArgument(format!(
                "beta must be 'auto' or a positive number, got '{s}'"
            ))),
        }
    }
}

impl fmt::Display for WeightBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Auto => f.write_str("auto"),
            Self::Fixed(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpConfig {
    pub hidden: HiddenCount,
    pub beta: WeightBound,
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Stop once the risk improves by less than this over 25 epochs.
    pub tolerance: f64,
    pub seed: u64,
}

/// Window, in epochs, of the early-stopping test.
pub const STOPPING_WINDOW: usize = 25;

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: HiddenCount::Auto,
            beta: WeightBound::Auto,
            learning_rate: 0.05,
            max_epochs: 4000,
            tolerance: 1e-12,
            seed: 42,
        }
    }
}

impl MlpConfig {
    fn validate(&self) -> Result<()> {
        // A zero rate is accepted: it disables training and returns the
        // initialization untouched.
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be finite and nonnegative, got {}",
                self.learning_rate
            )));
        }
        if self.max_epochs == 0 {
            return Err(Error::InvalidArgument(
                "max_epochs must be at least 1".into(),
            ));
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be nonnegative, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub input_dim: usize,
    /// `k × d_m`, one row per hidden unit.
    pub hidden_weights: Vec<Vec<f64>>,
    pub hidden_biases: Vec<f64>,
    pub output_weights: Vec<f64>,
    pub output_bias: f64,
    pub beta: f64,
    pub standardization: Standardization,
    pub response_bound: f64,
    /// Empirical risk of the returned parameters on the training set.
    pub training_risk: f64,
    pub epochs: usize,
}

/// Same shape as the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradient {
    pub hidden_weights: Vec<Vec<f64>>,
    pub hidden_biases: Vec<f64>,
    pub output_weights: Vec<f64>,
    pub output_bias: f64,
}

impl MlpGradient {
    /// All coordinates in `(a, b, c, c0)` order.
    pub fn flatten(&self) -> Vec<f64> {
        self.hidden_weights
            .iter()
            .flatten()
            .chain(&self.hidden_biases)
            .chain(&self.output_weights)
            .copied()
            .chain(std::iter::once(self.output_bias))
            .collect()
    }
}

impl MlpModel {
    /// Assembles a network from explicit parameters.
    pub fn new(
        hidden_weights: Vec<Vec<f64>>,
        hidden_biases: Vec<f64>,
        output_weights: Vec<f64>,
        output_bias: f64,
        beta: f64,
        standardization: Standardization,
        response_bound: f64,
    ) -> Result<Self> {
        let k = hidden_biases.len();
        let d = standardization.dim();
        if hidden_weights.len() != k || output_weights.len() != k {
            return Err(Error::InvalidArgument(format!(
                "hidden layer shapes disagree: {} weight rows, {} biases, {} output weights",
                hidden_weights.len(),
                k,
                output_weights.len()
            )));
        }
        if let Some(row) = hidden_weights.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: row.len(),
            });
        }
        let model = Self {
            input_dim: d,
            hidden_weights,
            hidden_biases,
            output_weights,
            output_bias,
            beta,
            standardization,
            response_bound,
            training_risk: f64::NAN,
            epochs: 0,
        };
        if !model.parameters_finite() {
            return Err(Error::InvalidArgument(
                "network parameters must be finite".into(),
            ));
        }
        Ok(model)
    }

    pub fn hidden_count(&self) -> usize {
        self.hidden_biases.len()
    }

    /// `|c0| + Σ|c_i|`.
    pub fn output_l1(&self) -> f64 {
        self.output_bias.abs() + self.output_weights.iter().map(|c| c.abs()).sum::<f64>()
    }

    pub fn parameters_finite(&self) -> bool {
        self.hidden_weights.iter().flatten().all(|v| v.is_finite())
            && self.hidden_biases.iter().all(|v| v.is_finite())
            && self.output_weights.iter().all(|v| v.is_finite())
            && self.output_bias.is_finite()
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                got,
            });
        }
        Ok(())
    }

    fn forward_standardized(&self, z: &[f64]) -> f64 {
        let mut out = self.output_bias;
        for ((a, b), c) in self
            .hidden_weights
            .iter()
            .zip(&self.hidden_biases)
            .zip(&self.output_weights)
        {
            let pre: f64 = a.iter().zip(z).map(|(w, v)| w * v).sum::<f64>() + b;
            out += c * sigmoid(pre);
        }
        out
    }

    /// Network output before clamping.
    pub fn raw_output(&self, x_raw: &[f64]) -> Result<f64> {
        self.check_dim(x_raw.len())?;
        Ok(self.forward_standardized(&self.standardization.apply(x_raw)))
    }

    pub fn predict(&self, x_raw: &[f64]) -> Result<f64> {
        let k = self.response_bound;
        Ok(self.raw_output(x_raw)?.clamp(-k, k))
    }

    /// Unclamped empirical squared risk on `ds`.
    pub fn empirical_risk(&self, ds: &Dataset) -> Result<f64> {
        self.check_dim(ds.p())?;
        let mut z = vec![0.0; ds.p()];
        let mut total = 0.0;
        for (row, y) in ds.rows().zip(ds.targets()) {
            self.standardization.apply_into(row, &mut z);
            let r = self.forward_standardized(&z) - y;
            total += r * r;
        }
        Ok(total / ds.n() as f64)
    }

    fn project(&mut self) {
        let l1 = self.output_l1();
        if l1 > self.beta {
            let scale = self.beta / l1;
            self.output_weights.iter_mut().for_each(|c| *c *= scale);
            self.output_bias *= scale;
        }
    }
}

pub fn predict_mlp(model: &MlpModel, x_raw: &[f64]) -> Result<f64> {
    model.predict(x_raw)
}

/// Risk and its exact gradient over pre-standardized rows `z` (row-major).
fn risk_and_gradient(model: &MlpModel, z: &[f64], y: &[f64], grad: &mut MlpGradient) -> f64 {
    let d = model.input_dim;
    let k = model.hidden_count();
    let n = y.len();
    for row in grad.hidden_weights.iter_mut() {
        row.iter_mut().for_each(|v| *v = 0.0);
    }
    grad.hidden_biases.iter_mut().for_each(|v| *v = 0.0);
    grad.output_weights.iter_mut().for_each(|v| *v = 0.0);
    grad.output_bias = 0.0;

    let mut act = vec![0.0; k];
    let mut risk = 0.0;
    for (zi, yi) in z.chunks_exact(d).zip(y) {
        let mut out = model.output_bias;
        for (h, s) in act.iter_mut().enumerate() {
            let pre: f64 = model.hidden_weights[h]
                .iter()
                .zip(zi)
                .map(|(w, v)| w * v)
                .sum::<f64>()
                + model.hidden_biases[h];
            *s = sigmoid(pre);
            out += model.output_weights[h] * *s;
        }
        let r = out - yi;
        risk += r * r;
        grad.output_bias += r;
        for (h, s) in act.iter().enumerate() {
            grad.output_weights[h] += r * s;
            let delta = r * model.output_weights[h] * s * (1.0 - s);
            grad.hidden_biases[h] += delta;
            for (g, v) in grad.hidden_weights[h].iter_mut().zip(zi) {
                *g += delta * v;
            }
        }
    }
    let scale = 2.0 / n as f64;
    for row in grad.hidden_weights.iter_mut() {
        row.iter_mut().for_each(|v| *v *= scale);
    }
    grad.hidden_biases.iter_mut().for_each(|v| *v *= scale);
    grad.output_weights.iter_mut().for_each(|v| *v *= scale);
    grad.output_bias *= scale;
    risk / n as f64
}

/// Least-squares output weights for the current hidden layer. Hidden columns
/// are centered and orthogonalized one at a time (two-pass modified
/// Gram-Schmidt); a column that is numerically dependent on earlier ones, or
/// constant, gets weight zero.
fn solve_output_layer(model: &mut MlpModel, z: &[f64], y: &[f64]) {
    const RANK_TOL: f64 = 1e-8;
    let d = model.input_dim;
    let k = model.hidden_count();
    let n = y.len();
    let nf = n as f64;
    let mut cols = vec![vec![0.0; n]; k];
    for (i, zi) in z.chunks_exact(d).enumerate() {
        for h in 0..k {
            let pre: f64 = model.hidden_weights[h]
                .iter()
                .zip(zi)
                .map(|(w, v)| w * v)
                .sum::<f64>()
                + model.hidden_biases[h];
            cols[h][i] = sigmoid(pre);
        }
    }
    let means: Vec<f64> = cols.iter().map(|c| c.iter().sum::<f64>() / nf).collect();
    let y_mean = y.iter().sum::<f64>() / nf;
    let yc: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    let mut q: Vec<Vec<f64>> = Vec::new();
    let mut r: Vec<Vec<f64>> = Vec::new();
    let mut kept = Vec::new();
    for (h, col) in cols.iter().enumerate() {
        let mut v: Vec<f64> = col.iter().map(|x| x - means[h]).collect();
        let norm0 = dot(&v, &v).sqrt();
        let mut coeffs = vec![0.0; q.len()];
        for _ in 0..2 {
            for (qi, ci) in q.iter().zip(coeffs.iter_mut()) {
                let proj = dot(qi, &v);
                *ci += proj;
                v.iter_mut().zip(qi).for_each(|(a, b)| *a -= proj * b);
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm0 <= RANK_TOL * nf.sqrt() || norm <= RANK_TOL * norm0 {
            continue;
        }
        v.iter_mut().for_each(|a| *a /= norm);
        coeffs.push(norm);
        q.push(v);
        r.push(coeffs);
        kept.push(h);
    }
    let m = q.len();
    let qty: Vec<f64> = q.iter().map(|qi| dot(qi, &yc)).collect();
    let mut beta = vec![0.0; m];
    for row in (0..m).rev() {
        let mut acc = qty[row];
        for col in row + 1..m {
            acc -= r[col][row] * beta[col];
        }
        beta[row] = acc / r[row][row];
    }
    model.output_weights.iter_mut().for_each(|c| *c = 0.0);
    for (b, &h) in beta.iter().zip(&kept) {
        model.output_weights[h] = *b;
    }
    model.output_bias = y_mean
        - model
            .output_weights
            .iter()
            .zip(&means)
            .map(|(c, m)| c * m)
            .sum::<f64>();
}

/// Sample standard deviation of the targets, or 1 when they are constant.
fn target_scale(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    if var > 0.0 && var.is_finite() {
        var.sqrt()
    } else {
        1.0
    }
}

fn zero_gradient(k: usize, d: usize) -> MlpGradient {
    MlpGradient {
        hidden_weights: vec![vec![0.0; d]; k],
        hidden_biases: vec![0.0; k],
        output_weights: vec![0.0; k],
        output_bias: 0.0,
    }
}

fn standardized_rows(model: &MlpModel, ds: &Dataset) -> Vec<f64> {
    let mut z = vec![0.0; ds.features().len()];
    for (row, out) in ds.rows().zip(z.chunks_exact_mut(ds.p())) {
        model.standardization.apply_into(row, out);
    }
    z
}

/// Exact gradient of the unclamped empirical risk with respect to every
/// parameter, inputs standardized with the model's own statistics.
pub fn risk_gradient(model: &MlpModel, ds: &Dataset) -> Result<MlpGradient> {
    model.check_dim(ds.p())?;
    let z = standardized_rows(model, ds);
    let mut grad = zero_gradient(model.hidden_count(), model.input_dim);
    risk_and_gradient(model, &z, ds.targets(), &mut grad);
    Ok(grad)
}

/// Fits the network on raw features; the input standardization is estimated
/// from `ds` and stored in the model.
pub fn fit_mlp(ds: &Dataset, cfg: &MlpConfig) -> Result<MlpModel> {
    fit_mlp_with_callback(ds, cfg, |_, _| {})
}

/// As [`fit_mlp`], calling `on_epoch(&model, epoch)` after each update and
/// projection. `model.training_risk` holds the risk of those parameters.
pub fn fit_mlp_with_callback<F>(ds: &Dataset, cfg: &MlpConfig, mut on_epoch: F) -> Result<MlpModel>
where
    F: FnMut(&MlpModel, usize),
{
    cfg.validate()?;
    let n = ds.n();
    let d = ds.p();
    let standardization = Standardization::fit(ds)?;
    let k = match cfg.hidden {
        HiddenCount::Auto => hidden_count_auto(n, d)?,
        HiddenCount::Fixed(k) => k,
    };
    let beta = match cfg.beta {
        WeightBound::Auto => beta_auto(n, ds.response_bound()),
        WeightBound::Fixed(b) => b,
    };
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "beta must be positive, got {beta}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let in_scale = 1.0 / (d as f64).sqrt();
    let out_scale = beta / (4.0 * (k + 1) as f64);
    let hidden_weights = (0..k)
        .map(|_| {
            (0..d)
                .map(|_| rng.random_range(-1.0..=1.0) * in_scale)
                .collect()
        })
        .collect();
    let hidden_biases = (0..k)
        .map(|_| rng.random_range(-1.0..=1.0) * in_scale)
        .collect();
    let output_weights = (0..k)
        .map(|_| rng.random_range(-out_scale..=out_scale))
        .collect();
    let output_bias = rng.random_range(-out_scale..=out_scale);

    let mut model = MlpModel {
        input_dim: d,
        hidden_weights,
        hidden_biases,
        output_weights,
        output_bias,
        beta,
        standardization,
        response_bound: ds.response_bound(),
        training_risk: f64::NAN,
        epochs: 0,
    };
    let z = standardized_rows(&model, ds);
    let y = ds.targets();
    let mut grad = zero_gradient(k, d);
    let mut risk = risk_and_gradient(&model, &z, y, &mut grad);
    if !risk.is_finite() {
        return Err(Error::Diverged { epoch: 0 });
    }
    model.training_risk = risk;
    let mut history = Vec::with_capacity(cfg.max_epochs + 1);
    history.push(risk);
    let lr = cfg.learning_rate;
    let lr_hidden = lr / target_scale(y).powi(2);

    for epoch in 1..=cfg.max_epochs {
        for (row, g) in model.hidden_weights.iter_mut().zip(&grad.hidden_weights) {
            row.iter_mut().zip(g).for_each(|(w, g)| *w -= lr_hidden * g);
        }
        model
            .hidden_biases
            .iter_mut()
            .zip(&grad.hidden_biases)
            .for_each(|(b, g)| *b -= lr_hidden * g);
        model
            .output_weights
            .iter_mut()
            .zip(&grad.output_weights)
            .for_each(|(c, g)| *c -= lr * g);
        model.output_bias -= lr * grad.output_bias;
        model.project();

        risk = risk_and_gradient(&model, &z, y, &mut grad);
        if !risk.is_finite() || !model.parameters_finite() {
            return Err(Error::Diverged { epoch });
        }
        model.training_risk = risk;
        model.epochs = epoch;
        on_epoch(&model, epoch);
        history.push(risk);
        if epoch >= STOPPING_WINDOW && history[epoch - STOPPING_WINDOW] - risk < cfg.tolerance {
            break;
        }
    }
    if lr > 0.0 {
        polish_output_layer(&mut model, &z, y);
    }
    Ok(model)
}

/// Replaces `(c, c0)` by their least-squares values for the trained hidden
/// layer, projected onto the β-ball, when that lowers the training risk.
fn polish_output_layer(model: &mut MlpModel, z: &[f64], y: &[f64]) {
    let mut candidate = model.clone();
    solve_output_layer(&mut candidate, z, y);
    candidate.project();
    let mut scratch = zero_gradient(model.hidden_count(), model.input_dim);
    let risk = risk_and_gradient(&candidate, z, y, &mut scratch);
    if risk.is_finite() && candidate.parameters_finite() && risk < model.training_risk {
        candidate.training_risk = risk;
        *model = candidate;
    }
}
