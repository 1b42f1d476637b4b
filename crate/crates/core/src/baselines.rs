//! Linear comparators: least squares, forward-AIC stepwise, and PLS.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Relative residual norm below which a column counts as linearly dependent
/// on the columns admitted before it.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Features with a nonzero coefficient slot (stepwise: the chosen set).
    pub used_features: Vec<usize>,
    /// PLS components actually extracted.
    pub components: Option<usize>,
    /// Some column was linearly dependent on earlier ones and got coefficient 0.
    #[serde(default)]
    pub rank_deficient: bool,
    /// PLS weight vectors in standardized feature space, one per component.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pls_weights: Vec<Vec<f64>>,
    pub response_bound: f64,
}

impl LinearModel {
    pub fn raw_output(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.coefficients.len() {
            return Err(Error::DimensionMismatch {
                expected: self.coefficients.len(),
                got: x.len(),
            });
        }
        Ok(self.intercept
            + self
                .coefficients
                .iter()
                .zip(x)
                .map(|(b, v)| b * v)
                .sum::<f64>())
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let k = self.response_bound;
        Ok(self.raw_output(x)?.clamp(-k, k))
    }
}

struct LeastSquares {
    /// Coefficient per requested column (0 for dependent columns).
    coefficients: Vec<f64>,
    intercept: f64,
    sse: f64,
    dependent: Vec<bool>,
}

/// Least squares with intercept on the listed columns.
///
/// Columns are centered and admitted one at a time by modified Gram-Schmidt
/// (two passes). A column whose residual is below `RANK_TOL` of its centered
/// norm is dependent on the earlier ones and is skipped. The kept columns give
/// `Xc = Q R`, and `R β = Qᵀ yc` is solved by back substitution.
fn least_squares(ds: &Dataset, columns: &[usize]) -> LeastSquares {
    let n = ds.n();
    let nf = n as f64;
    let y = ds.targets();
    let y_mean = y.iter().sum::<f64>() / nf;
    let yc: Vec<f64> = y.iter().map(|v| v - y_mean).collect();

    let mut means = Vec::with_capacity(columns.len());
    let mut q: Vec<Vec<f64>> = Vec::new();
    let mut r: Vec<Vec<f64>> = Vec::new();
    let mut kept: Vec<usize> = Vec::new();
    let mut dependent = vec![false; columns.len()];
    for (slot, &j) in columns.iter().enumerate() {
        let col = ds.column(j);
        let mean = col.iter().sum::<f64>() / nf;
        means.push(mean);
        let mut v: Vec<f64> = col.iter().map(|x| x - mean).collect();
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
        if norm0 == 0.0 || norm <= RANK_TOL * norm0 {
            dependent[slot] = true;
            continue;
        }
        v.iter_mut().for_each(|a| *a /= norm);
        coeffs.push(norm);
        q.push(v);
        r.push(coeffs);
        kept.push(slot);
    }

    // r[c] is column c of R (entries 0..=c).
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
    let mut coefficients = vec![0.0; columns.len()];
    for (b, &slot) in beta.iter().zip(&kept) {
        coefficients[slot] = *b;
    }
    let intercept = y_mean
        - coefficients
            .iter()
            .zip(&means)
            .map(|(b, m)| b * m)
            .sum::<f64>();
    let sse = (0..n)
        .map(|i| {
            let row = ds.row(i);
            let fit = intercept
                + columns
                    .iter()
                    .zip(&coefficients)
                    .map(|(&j, b)| b * row[j])
                    .sum::<f64>();
            (y[i] - fit).powi(2)
        })
        .sum();
    LeastSquares {
        coefficients,
        intercept,
        sse,
        dependent,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn expand(ds: &Dataset, columns: &[usize], fit: &LeastSquares) -> LinearModel {
    let mut coefficients = vec![0.0; ds.p()];
    for (&j, b) in columns.iter().zip(&fit.coefficients) {
        coefficients[j] = *b;
    }
    LinearModel {
        coefficients,
        intercept: fit.intercept,
        used_features: columns.to_vec(),
        components: None,
        rank_deficient: fit.dependent.iter().any(|d| *d),
        pls_weights: Vec::new(),
        response_bound: ds.response_bound(),
    }
}

/// Ordinary least squares with intercept on every feature.
pub fn fit_ols(ds: &Dataset) -> Result<LinearModel> {
    let (n, p) = (ds.n(), ds.p());
    if n <= p {
        return Err(Error::Underdetermined { n, p });
    }
    let columns: Vec<usize> = (0..p).collect();
    let fit = least_squares(ds, &columns);
    Ok(expand(ds, &columns, &fit))
}

/// `n ln(SSE / n) + 2 (q + 1)` with `q` predictors.
///
/// SSE is floored at `ε · SST` so that round-off on an exact fit does not
/// read as an improvement.
pub fn aic(n: usize, sse: f64, sst: f64, predictors: usize) -> f64 {
    let floor = f64::EPSILON * sst;
    let sse = sse.max(floor).max(f64::MIN_POSITIVE);
    n as f64 * (sse / n as f64).ln() + 2.0 * (predictors + 1) as f64
}

/// Forward selection from the intercept-only model, adding whichever feature
/// lowers AIC most until none does. `used_features` keeps entry order.
pub fn fit_stepwise(ds: &Dataset) -> Result<LinearModel> {
    let (n, p) = (ds.n(), ds.p());
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "stepwise regression needs at least 3 rows, got {n}"
        )));
    }
    let y = ds.targets();
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - y_mean).powi(2)).sum();

    let mut chosen: Vec<usize> = Vec::new();
    let mut current = aic(n, sst, sst, 0);
    loop {
        // keep a residual degree of freedom
        if chosen.len() + 2 > n {
            break;
        }
        let mut best: Option<(usize, f64)> = None;
        for j in (0..p).filter(|j| !chosen.contains(j)) {
            let mut cols = chosen.clone();
            cols.push(j);
            let fit = least_squares(ds, &cols);
            if fit.dependent.iter().any(|d| *d) {
                continue;
            }
            let score = aic(n, fit.sse, sst, cols.len());
            if best.is_none_or(|(_, b)| score < b) {
                best = Some((j, score));
            }
        }
        match best {
            Some((j, score)) if score < current => {
                chosen.push(j);
                current = score;
            }
            _ => break,
        }
    }
    let fit = least_squares(ds, &chosen);
    Ok(expand(ds, &chosen, &fit))
}

/// PLS1 by NIPALS on standardized features and centered response.
///
/// Each round takes `w ∝ Eᵀf`, scores `t = E w`, loadings `p = Eᵀt / tᵀt`,
/// `q = fᵀt / tᵀt`, and deflates `E ← E − t pᵀ`, `f ← f − q t`. Coefficients
/// are `W (PᵀW)⁻¹ q`, mapped back to raw feature units. Extraction stops early
/// once the response is fully explained.
pub fn fit_pls(ds: &Dataset, n_components: usize) -> Result<LinearModel> {
    let (n, p) = (ds.n(), ds.p());
    let max = (n.saturating_sub(1)).min(p);
    if n_components < 1 || n_components > max {
        return Err(Error::InvalidArgument(format!(
            "PLS component count must lie in 1..={max}, got {n_components}"
        )));
    }
    let nf = n as f64;
    let means: Vec<f64> = (0..p)
        .map(|j| ds.rows().map(|r| r[j]).sum::<f64>() / nf)
        .collect();
    let scales: Vec<f64> = (0..p)
        .map(|j| {
            let var = ds.rows().map(|r| (r[j] - means[j]).powi(2)).sum::<f64>() / (nf - 1.0);
            if var > 0.0 {
                var.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    // column-major residual matrix
    let mut e: Vec<Vec<f64>> = (0..p)
        .map(|j| ds.rows().map(|r| (r[j] - means[j]) / scales[j]).collect())
        .collect();
    let y = ds.targets();
    let y_mean = y.iter().sum::<f64>() / nf;
    let mut f: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
    let f_norm0 = dot(&f, &f).sqrt();

    let mut weights: Vec<Vec<f64>> = Vec::new();
    let mut loadings: Vec<Vec<f64>> = Vec::new();
    let mut qs: Vec<f64> = Vec::new();
    for _ in 0..n_components {
        let mut w: Vec<f64> = e.iter().map(|col| dot(col, &f)).collect();
        let w_norm = dot(&w, &w).sqrt();
        if w_norm == 0.0 || dot(&f, &f).sqrt() <= 1e-13 * f_norm0.max(f64::MIN_POSITIVE) {
            break;
        }
        w.iter_mut().for_each(|v| *v /= w_norm);
        let mut t = vec![0.0; n];
        for (col, wj) in e.iter().zip(&w) {
            t.iter_mut().zip(col).for_each(|(ti, c)| *ti += wj * c);
        }
        let tt = dot(&t, &t);
        if tt == 0.0 {
            break;
        }
        let load: Vec<f64> = e.iter().map(|col| dot(col, &t) / tt).collect();
        let q = dot(&f, &t) / tt;
        for (col, pj) in e.iter_mut().zip(&load) {
            col.iter_mut().zip(&t).for_each(|(c, ti)| *c -= ti * pj);
        }
        f.iter_mut().zip(&t).for_each(|(fi, ti)| *fi -= q * ti);
        weights.push(w);
        loadings.push(load);
        qs.push(q);
    }

    let a = weights.len();
    let mut coef_std = vec![0.0; p];
    if a > 0 {
        // (PᵀW) u = q
        let mut m: Vec<Vec<f64>> = (0..a)
            .map(|i| (0..a).map(|k| dot(&loadings[i], &weights[k])).collect())
            .collect();
        let u = solve_small(&mut m, qs.clone())?;
        for (wk, uk) in weights.iter().zip(&u) {
            coef_std.iter_mut().zip(wk).for_each(|(c, w)| *c += w * uk);
        }
    }
    let coefficients: Vec<f64> = coef_std.iter().zip(&scales).map(|(c, s)| c / s).collect();
    let intercept = y_mean
        - coefficients
            .iter()
            .zip(&means)
            .map(|(b, m)| b * m)
            .sum::<f64>();
    Ok(LinearModel {
        used_features: (0..p).collect(),
        coefficients,
        intercept,
        components: Some(a),
        rank_deficient: false,
        pls_weights: weights,
        response_bound: ds.response_bound(),
    })
}

/// Gaussian elimination with partial pivoting on a small dense system.
fn solve_small(m: &mut [Vec<f64>], mut rhs: Vec<f64>) -> Result<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .expect("nonempty range");
        if m[pivot][col] == 0.0 {
            return Err(Error::Domain("singular PLS loading system".into()));
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..n {
            let factor = m[row][col] / m[col][col];
            for k in col..n {
                m[row][k] -= factor * m[col][k];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let acc = rhs[row] - (row + 1..n).map(|k| m[row][k] * x[k]).sum::<f64>();
        x[row] = acc / m[row][row];
    }
    Ok(x)
}
