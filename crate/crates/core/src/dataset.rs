//! Tabular regression data: CSV ingestion, synthetic generators,
//! standardization and train/test splits.

use std::f64::consts::PI;
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Feature matrix plus a bounded response vector.
///
/// Features are stored row-major. `column_names` holds the `p` feature names
/// followed by the target name.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    column_names: Vec<String>,
    features: Vec<f64>,
    targets: Vec<f64>,
    n: usize,
    p: usize,
    response_bound: f64,
}

/// Response bound derived from observed targets: `max|y|` rounded up to an
/// integer, never below 1.
pub fn response_bound_for(targets: &[f64]) -> f64 {
    let max_abs = targets.iter().fold(0.0_f64, |m, y| m.max(y.abs()));
    max_abs.ceil().max(1.0)
}

impl Dataset {
    /// Builds a dataset from row vectors. When `response_bound` is `None` it is
    /// derived with [`response_bound_for`].
    pub fn new(
        column_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        targets: Vec<f64>,
        response_bound: Option<f64>,
    ) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map(Vec::len).unwrap_or(0);
        let mut features = Vec::with_capacity(n * p);
        for row in &rows {
            if row.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    got: row.len(),
                });
            }
            features.extend_from_slice(row);
        }
        Self::from_flat(column_names, features, targets, p, response_bound)
    }

    pub fn from_flat(
        column_names: Vec<String>,
        features: Vec<f64>,
        targets: Vec<f64>,
        p: usize,
        response_bound: Option<f64>,
    ) -> Result<Self> {
        let n = targets.len();
        if n == 0 {
            return Err(Error::EmptyData);
        }
        if p == 0 {
            return Err(Error::InvalidArgument(
                "dataset needs at least one feature".into(),
            ));
        }
        if features.len() != n * p {
            return Err(Error::DimensionMismatch {
                expected: n * p,
                got: features.len(),
            });
        }
        if column_names.len() != p + 1 {
            return Err(Error::Schema(format!(
                "expected {} column names ({} features + target), got {}",
                p + 1,
                p,
                column_names.len()
            )));
        }
        for (idx, v) in features.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: idx / p + 1,
                    column: idx % p + 1,
                });
            }
        }
        for (i, y) in targets.iter().enumerate() {
            if !y.is_finite() {
                return Err(Error::NonFinite {
                    row: i + 1,
                    column: p + 1,
                });
            }
        }
        let bound = response_bound.unwrap_or_else(|| response_bound_for(&targets));
        if !(bound.is_finite() && bound > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "response bound must be positive and finite, got {bound}"
            )));
        }
        if let Some(y) = targets.iter().find(|y| y.abs() > bound) {
            return Err(Error::Domain(format!(
                "target {y} lies outside the response bound [-{bound}, {bound}]"
            )));
        }
        Ok(Self {
            column_names,
            features,
            targets,
            n,
            p,
            response_bound: bound,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.p)
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.features[i * self.p + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn feature_names(&self) -> &[String] {
        &self.column_names[..self.p]
    }

    pub fn target_name(&self) -> &str {
        &self.column_names[self.p]
    }

    /// The `K` of `Y ∈ [-K, K]`.
    pub fn response_bound(&self) -> f64 {
        self.response_bound
    }

    /// Rows at `indices`, in that order. The response bound is kept.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let mut features = Vec::with_capacity(indices.len() * self.p);
        let mut targets = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.n {
                return Err(Error::InvalidArgument(format!(
                    "row index {i} out of range for {} rows",
                    self.n
                )));
            }
            features.extend_from_slice(self.row(i));
            targets.push(self.targets[i]);
        }
        Dataset::from_flat(
            self.column_names.clone(),
            features,
            targets,
            self.p,
            Some(self.response_bound),
        )
    }

    /// Same rows and targets with the feature matrix replaced.
    pub fn with_features(
        &self,
        feature_names: Vec<String>,
        features: Vec<f64>,
        p: usize,
    ) -> Result<Dataset> {
        let mut names = feature_names;
        names.push(self.target_name().to_string());
        Dataset::from_flat(
            names,
            features,
            self.targets.clone(),
            p,
            Some(self.response_bound),
        )
    }
}

/// Reads a CSV file; `target_column` becomes the response, every other column
/// a feature (in file order).
pub fn load_csv(path: impl AsRef<Path>, target_column: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, target_column)
}

pub fn read_csv<R: Read>(reader: R, target_column: &str) -> Result<Dataset> {
    let table = read_table(reader)?;
    let target_idx = table.column_index(target_column)?;
    if table.rows.is_empty() {
        return Err(Error::EmptyData);
    }
    let p = table.headers.len() - 1;
    let mut features = Vec::with_capacity(table.rows.len() * p);
    let mut targets = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        for (c, v) in row.iter().enumerate() {
            if c == target_idx {
                targets.push(*v);
            } else {
                features.push(*v);
            }
        }
    }
    let mut names: Vec<String> = table
        .headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != target_idx)
        .map(|(_, h)| h.clone())
        .collect();
    names.push(table.headers[target_idx].clone());
    Dataset::from_flat(names, features, targets, p, None)
}

/// A numeric CSV with its header, before any column is singled out as the
/// target. May have zero rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }
}

pub fn load_table(path: impl AsRef<Path>) -> Result<Table> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_table(file)
}

/// Parses every cell as `f64`. Errors name the 1-based data row (header
/// excluded) and column.
pub fn read_table<R: Read>(reader: R) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Csv(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(Error::EmptyData);
    }
    let mut rows = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        if record.len() != headers.len() {
            return Err(Error::Csv(format!(
                "row {} has {} cells, header has {}",
                r + 1,
                record.len(),
                headers.len()
            )));
        }
        let mut row = Vec::with_capacity(headers.len());
        for (c, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::NonNumeric {
                row: r + 1,
                column: c + 1,
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: r + 1,
                    column: c + 1,
                });
            }
            row.push(v);
        }
        rows.push(row);
    }
    Ok(Table { headers, rows })
}

/// Writes features (in order) followed by the target column. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_csv_to(ds, file).map_err(|e| match e {
        Error::Csv(msg) => Error::Csv(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_csv_to<W: Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| Error::Csv(e.to_string());
    wtr.write_record(ds.column_names()).map_err(csv_err)?;
    for (row, y) in ds.rows().zip(ds.targets()) {
        let cells = row.iter().chain(std::iter::once(y)).map(|v| v.to_string());
        wtr.write_record(cells).map_err(csv_err)?;
    }
    wtr.flush().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(())
}

/// Recovery efficiency in percent from inlet and outlet concentrations.
pub fn efficiency(inlet_ppm: f64, outlet_ppm: f64) -> Result<f64> {
    if !(inlet_ppm.is_finite() && inlet_ppm > 0.0) {
        return Err(Error::Domain(format!(
            "inlet concentration must be positive, got {inlet_ppm}"
        )));
    }
    if !(outlet_ppm.is_finite() && outlet_ppm >= 0.0) {
        return Err(Error::Domain(format!(
            "outlet concentration must be nonnegative, got {outlet_ppm}"
        )));
    }
    Ok((inlet_ppm - outlet_ppm) * 100.0 / inlet_ppm)
}

/// Per-column location and scale, fitted on one dataset and applicable to new
/// rows. Columns with zero spread are flagged constant and map to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    pub constant: Vec<bool>,
}

impl Standardization {
    /// Sample statistics (n − 1 denominator) of every feature column.
    pub fn fit(ds: &Dataset) -> Result<Self> {
        let n = ds.n();
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "standardization needs at least 2 rows, got {n}"
            )));
        }
        let p = ds.p();
        let mut means = vec![0.0; p];
        for row in ds.rows() {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n as f64);
        let mut sds = vec![0.0; p];
        for row in ds.rows() {
            for ((s, v), m) in sds.iter_mut().zip(row).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        sds.iter_mut()
            .for_each(|s| *s = (*s / (n - 1) as f64).sqrt());
        let constant = (0..p)
            .map(|j| {
                let first = ds.value(0, j);
                ds.rows().all(|r| r[j] == first)
            })
            .collect();
        Ok(Self {
            means,
            sds,
            constant,
        })
    }

    /// Leaves every column unchanged.
    pub fn identity(dim: usize) -> Self {
        Self {
            means: vec![0.0; dim],
            sds: vec![1.0; dim],
            constant: vec![false; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn apply_value(&self, j: usize, v: f64) -> f64 {
        if self.constant[j] {
            0.0
        } else {
            (v - self.means[j]) / self.sds[j]
        }
    }

    pub fn apply_into(&self, row: &[f64], out: &mut [f64]) {
        for (j, (o, v)) in out.iter_mut().zip(row).enumerate() {
            *o = self.apply_value(j, *v);
        }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; row.len()];
        self.apply_into(row, &mut out);
        out
    }

    /// Inverse map. Constant columns come back as their mean.
    pub fn invert(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, z)| {
                if self.constant[j] {
                    self.means[j]
                } else {
                    z * self.sds[j] + self.means[j]
                }
            })
            .collect()
    }

    pub fn apply_dataset(&self, ds: &Dataset) -> Result<Dataset> {
        if ds.p() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: ds.p(),
            });
        }
        let mut z = vec![0.0; ds.features().len()];
        for (row, out) in ds.rows().zip(z.chunks_exact_mut(ds.p())) {
            self.apply_into(row, out);
        }
        ds.with_features(ds.feature_names().to_vec(), z, ds.p())
    }
}

/// Standardized copy of `ds` plus the statistics needed to repeat the mapping.
pub fn standardize(ds: &Dataset) -> Result<(Dataset, Standardization)> {
    let st = Standardization::fit(ds)?;
    let z = st.apply_dataset(ds)?;
    Ok((z, st))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub seed: u64,
}

impl SplitPlan {
    /// Seeded shuffle of `0..n`; the first `⌊n·test_fraction⌋` go to test.
    /// Both index lists are returned sorted.
    pub fn holdout(n: usize, test_fraction: f64, seed: u64) -> Result<Self> {
        if !(test_fraction > 0.0 && test_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "test fraction must lie in (0, 1), got {test_fraction}"
            )));
        }
        let n_test = (n as f64 * test_fraction).floor() as usize;
        if n_test < 1 || n - n_test < 1 {
            return Err(Error::InvalidArgument(format!(
                "{n} rows cannot be split with test fraction {test_fraction}"
            )));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut test_indices = order[..n_test].to_vec();
        let mut train_indices = order[n_test..].to_vec();
        test_indices.sort_unstable();
        train_indices.sort_unstable();
        Ok(Self {
            train_indices,
            test_indices,
            seed,
        })
    }

    /// `folds` disjoint test folds covering `0..n`, sizes differing by at most one.
    pub fn kfold(n: usize, folds: usize, seed: u64) -> Result<Vec<Self>> {
        if folds < 2 || folds > n {
            return Err(Error::InvalidArgument(format!(
                "cannot make {folds} folds from {n} rows"
            )));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let plans = (0..folds)
            .map(|f| {
                let lo = f * n / folds;
                let hi = (f + 1) * n / folds;
                let mut test_indices = order[lo..hi].to_vec();
                let mut train_indices: Vec<usize> =
                    order[..lo].iter().chain(&order[hi..]).copied().collect();
                test_indices.sort_unstable();
                train_indices.sort_unstable();
                Self {
                    train_indices,
                    test_indices,
                    seed,
                }
            })
            .collect();
        Ok(plans)
    }
}

pub fn split(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<SplitPlan> {
    SplitPlan::holdout(ds.n(), test_fraction, seed)
}

/// Synthetic regression functions on the unit cube.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Generator {
    /// `m(x) = 0` if `x1 < 0.5` else `10`, two inputs.
    AxisSteps,
    /// `10 sin(π x1 x2) + 20 (x3 − 0.5)² + 10 x4 + 5 x5`.
    FriedmanLike,
    /// `1 + 2 x1 − 3 x2 + 0.5 x3`.
    Linear,
}

impl Generator {
    pub const ALL: [Generator; 3] = [Self::AxisSteps, Self::FriedmanLike, Self::Linear];

    pub fn name(self) -> &'static str {
        match self {
            Self::AxisSteps => "axis-steps",
            Self::FriedmanLike => "friedman-like",
            Self::Linear => "linear",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Self::AxisSteps => 2,
            Self::FriedmanLike => 5,
            Self::Linear => 3,
        }
    }

    /// Declared response bound; noisy targets are clipped to it.
    pub fn bound(self) -> f64 {
        match self {
            Self::AxisSteps => 20.0,
            Self::FriedmanLike => 40.0,
            Self::Linear => 10.0,
        }
    }

    /// Values a noiseless piecewise-constant generator can take.
    pub fn plateaus(self) -> Option<&'static [f64]> {
        match self {
            Self::AxisSteps => Some(&[0.0, 10.0]),
            _ => None,
        }
    }

    /// The noiseless regression function.
    pub fn mean(self, x: &[f64]) -> f64 {
        match self {
            Self::AxisSteps => {
                if x[0] < 0.5 {
                    0.0
                } else {
                    10.0
                }
            }
            Self::FriedmanLike => {
                10.0 * (PI * x[0] * x[1]).sin()
                    + 20.0 * (x[2] - 0.5).powi(2)
                    + 10.0 * x[3]
                    + 5.0 * x[4]
            }
            Self::Linear => 1.0 + 2.0 * x[0] - 3.0 * x[1] + 0.5 * x[2],
        }
    }

    /// `n` inputs drawn uniformly from the unit cube, row-major.
    pub fn sample_inputs<R: Rng>(self, n: usize, rng: &mut R) -> Vec<f64> {
        (0..n * self.dim()).map(|_| rng.random::<f64>()).collect()
    }

    pub fn column_names(self) -> Vec<String> {
        (1..=self.dim())
            .map(|j| format!("x{j}"))
            .chain(std::iter::once("y".to_string()))
            .collect()
    }
}

impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::UnknownGenerator(s.to_string()))
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub generator: Generator,
    pub n: usize,
    pub noise_sd: f64,
    pub seed: u64,
}

/// Draws `n` rows from the generator with additive Gaussian noise, clipped to
/// the generator's bound. Bit-identical for equal specs.
pub fn synthesize(spec: &SynthSpec) -> Result<Dataset> {
    if spec.n == 0 {
        return Err(Error::InvalidArgument("cannot synthesize 0 rows".into()));
    }
    let noise = Normal::new(0.0, spec.noise_sd).map_err(|_| {
        Error::InvalidArgument(format!(
            "noise sd must be finite and nonnegative, got {}",
            spec.noise_sd
        ))
    })?;
    let g = spec.generator;
    let p = g.dim();
    let k = g.bound();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut features = Vec::with_capacity(spec.n * p);
    let mut targets = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let start = features.len();
        features.extend((0..p).map(|_| rng.random::<f64>()));
        let eps = noise.sample(&mut rng);
        let y = g.mean(&features[start..]) + eps;
        targets.push(y.clamp(-k, k));
    }
    Dataset::from_flat(g.column_names(), features, targets, p, Some(k))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col_ds(values: &[f64]) -> Dataset {
        let rows = values.iter().map(|v| vec![*v]).collect();
        Dataset::new(
            vec!["x".into(), "y".into()],
            rows,
            vec![0.0; values.len()],
            None,
        )
        .unwrap()
    }

    #[test]
    fn efficiency_examples() {
        assert_eq!(efficiency(100.0, 100.0).unwrap(), 0.0);
        assert_eq!(efficiency(100.0, 0.0).unwrap(), 100.0);
        assert!((efficiency(2500.0, 1000.0).unwrap() - 60.0).abs() < 1e-12);
        assert!(matches!(efficiency(0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(efficiency(-5.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(efficiency(5.0, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn minimal_csv() {
        let ds = read_csv("x,y\n1,0\n".as_bytes(), "y").unwrap();
        assert_eq!((ds.n(), ds.p()), (1, 1));
        assert_eq!(ds.features(), &[1.0]);
        assert_eq!(ds.targets(), &[0.0]);
        assert_eq!(ds.response_bound(), 1.0);
    }

    #[test]
    fn tissue_row_parses() {
        let text = "Inlet Flow,Water Pressure,Air Pressure,Air-Left,Air-Right,ADT-D Left,ADT-D Right,Amount of chemical,Recovery Percentage\n\
                    2804,5.8,5.0,2.6,2.4,2.3,2.7,2.0,49.74\n";
        let ds = read_csv(text.as_bytes(), "Recovery Percentage").unwrap();
        assert_eq!(ds.p(), 8);
        assert_eq!(ds.row(0), &[2804.0, 5.8, 5.0, 2.6, 2.4, 2.3, 2.7, 2.0]);
        assert_eq!(ds.targets(), &[49.74]);
        assert_eq!(ds.response_bound(), 50.0);
        assert_eq!(ds.target_name(), "Recovery Percentage");
    }

    #[test]
    fn target_in_middle_is_removed_from_features() {
        let ds = read_csv("a,y,b\n1,2,3\n4,5,6\n".as_bytes(), "y").unwrap();
        assert_eq!(ds.column_names(), &["a", "b", "y"]);
        assert_eq!(ds.row(1), &[4.0, 6.0]);
        assert_eq!(ds.targets(), &[2.0, 5.0]);
    }

    #[test]
    fn non_numeric_cell_reports_position() {
        let text = "x1,x2,y\n1,2,3\n4,5,6\n7,abc,9\n";
        match read_csv(text.as_bytes(), "y") {
            Err(Error::NonNumeric { row, column, value }) => {
                assert_eq!((row, column), (3, 2));
                assert_eq!(value, "abc");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_error_paths() {
        assert!(matches!(
            read_csv("x,y\n1,2\n".as_bytes(), "z"),
            Err(Error::UnknownColumn(_))
        ));
        assert!(matches!(
            read_csv("".as_bytes(), "y"),
            Err(Error::EmptyData)
        ));
        assert!(matches!(
            read_csv("x,y\n".as_bytes(), "y"),
            Err(Error::EmptyData)
        ));
        // missing values are rejected
        assert!(matches!(
            read_csv("x,y\n,2\n".as_bytes(), "y"),
            Err(Error::NonNumeric {
                row: 1,
                column: 1,
                ..
            })
        ));
        assert!(matches!(
            read_csv("x,y\nNaN,2\n".as_bytes(), "y"),
            Err(Error::NonFinite { .. })
        ));
        let missing = load_csv("/definitely/not/here.csv", "y");
        assert!(matches!(missing, Err(Error::Io { .. })));
    }

    #[test]
    fn response_bound_rounds_up() {
        assert_eq!(response_bound_for(&[-3.2, 1.0]), 4.0);
        assert_eq!(response_bound_for(&[10.0]), 10.0);
        assert_eq!(response_bound_for(&[0.0, 0.0]), 1.0);
        let err = Dataset::new(
            vec!["x".into(), "y".into()],
            vec![vec![1.0]],
            vec![5.0],
            Some(2.0),
        );
        assert!(matches!(err, Err(Error::Domain(_))));
    }

    #[test]
    fn standardize_examples() {
        let (z, st) = standardize(&col_ds(&[2.0, 2.0, 2.0])).unwrap();
        assert_eq!(z.column(0), vec![0.0, 0.0, 0.0]);
        assert!(st.constant[0]);

        let (z, st) = standardize(&col_ds(&[0.0, 2.0])).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((z.value(0, 0) + h).abs() < 1e-15);
        assert!((z.value(1, 0) - h).abs() < 1e-15);
        assert_eq!(st.means[0], 1.0);
        assert!((st.sds[0] - 2f64.sqrt()).abs() < 1e-15);
        assert!((st.apply(&[4.0])[0] - 3.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!((st.apply(&[4.0])[0] - 2.1213).abs() < 1e-4);

        assert!(standardize(&col_ds(&[1.0])).is_err());
    }

    #[test]
    fn split_examples() {
        let a = SplitPlan::holdout(10, 0.3, 7).unwrap();
        let b = SplitPlan::holdout(10, 0.3, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.test_indices.len(), a.train_indices.len()), (3, 7));
        let m = SplitPlan::holdout(2, 0.5, 1).unwrap();
        assert_eq!((m.test_indices.len(), m.train_indices.len()), (1, 1));
        assert!(SplitPlan::holdout(10, 0.0, 1).is_err());
        assert!(SplitPlan::holdout(10, 1.0, 1).is_err());
        assert!(SplitPlan::holdout(3, 0.2, 1).is_err());
        assert!(SplitPlan::holdout(1, 0.99, 1).is_err());
    }

    #[test]
    fn kfold_partitions_rows() {
        let folds = SplitPlan::kfold(11, 3, 5).unwrap();
        let mut all: Vec<usize> = folds.iter().flat_map(|f| f.test_indices.clone()).collect();
        all.sort_unstable();
        assert_eq!(all, (0..11).collect::<Vec<_>>());
        for f in &folds {
            assert_eq!(f.train_indices.len() + f.test_indices.len(), 11);
        }
        assert!(SplitPlan::kfold(3, 1, 0).is_err());
        assert!(SplitPlan::kfold(3, 4, 0).is_err());
    }

    #[test]
    fn axis_steps_noiseless_hits_plateaus() {
        let ds = synthesize(&SynthSpec {
            generator: Generator::AxisSteps,
            n: 200,
            noise_sd: 0.0,
            seed: 11,
        })
        .unwrap();
        let plateaus = Generator::AxisSteps.plateaus().unwrap();
        assert!(ds.targets().iter().all(|y| plateaus.contains(y)));
        assert_eq!(ds.column_names(), &["x1", "x2", "y"]);
    }

    #[test]
    fn synthesize_is_deterministic_and_clipped() {
        let spec = SynthSpec {
            generator: Generator::Linear,
            n: 300,
            noise_sd: 50.0,
            seed: 9,
        };
        let a = synthesize(&spec).unwrap();
        let b = synthesize(&spec).unwrap();
        assert_eq!(a, b);
        assert!(a.targets().iter().all(|y| y.abs() <= 10.0));
        assert!(a.targets().iter().any(|y| y.abs() == 10.0));
    }

    #[test]
    fn generator_names_round_trip() {
        for g in Generator::ALL {
            assert_eq!(g.name().parse::<Generator>().unwrap(), g);
        }
        assert!(matches!(
            "spiral".parse::<Generator>(),
            Err(Error::UnknownGenerator(_))
        ));
    }

    #[test]
    fn friedman_mean_matches_monte_carlo_oracle() {
        // Oracle: average of m(x) over 10^6 independent uniform draws.
        let mut rng = ChaCha8Rng::seed_from_u64(0xF1);
        let draws = 1_000_000;
        let mut acc = 0.0;
        let mut x = [0.0; 5];
        for _ in 0..draws {
            for v in x.iter_mut() {
                *v = rng.random::<f64>();
            }
            acc += Generator::FriedmanLike.mean(&x);
        }
        let oracle = acc / draws as f64;

        let ds = synthesize(&SynthSpec {
            generator: Generator::FriedmanLike,
            n: 100,
            noise_sd: 1.0,
            seed: 3,
        })
        .unwrap();
        let y = ds.targets();
        let mean = y.iter().sum::<f64>() / 100.0;
        let sd = (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 99.0).sqrt();
        assert!(
            (mean - oracle).abs() <= 3.0 * sd / 10.0,
            "sample mean {mean}, oracle {oracle}, sd {sd}"
        );
    }
}
