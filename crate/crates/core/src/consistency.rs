//! Risk-versus-sample-size sweeps.
//!
//! For every `(n, repeat)` cell a training set is drawn from a generator, a
//! model is fitted with capacity set by a schedule in `n` (tree leaves or
//! hidden units), and its mean squared deviation from the noiseless
//! regression function is measured on a fresh sample of `10·n` inputs. If the
//! schedule grows slowly enough the median holdout risk should fall as `n`
//! grows.

use std::fmt;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::{synthesize, Generator, SynthSpec};
use crate::error::{Error, Result};
use crate::mlp::{fit_mlp, hidden_count_auto, HiddenCount, MlpConfig, WeightBound};
use crate::tree::{fit_tree, leaf_schedule, LeafSchedule, TreeConfig};

/// Holdout sample size as a multiple of `n`.
pub const HOLDOUT_FACTOR: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub generator: Generator,
    /// Strictly ascending, each at least 10.
    pub sizes: Vec<usize>,
    pub schedule: LeafSchedule,
    pub repeats: usize,
    pub noise_sd: f64,
    pub seed: u64,
    /// Tree sweeps only. Kept small so the leaf budget is what binds.
    pub minsplit_fraction: f64,
    /// Network sweeps only; `hidden` and `beta` are overridden with `auto`.
    pub mlp: MlpConfig,
}

impl SweepSpec {
    pub fn new(generator: Generator, sizes: Vec<usize>) -> Self {
        Self {
            generator,
            sizes,
            schedule: LeafSchedule::Sublog,
            repeats: 5,
            noise_sd: 1.0,
            seed: 42,
            minsplit_fraction: 0.01,
            mlp: MlpConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(Error::InvalidArgument(
                "sweep needs at least one size".into(),
            ));
        }
        if let Some(&n) = self.sizes.iter().find(|&&n| n < 10) {
            return Err(Error::InvalidArgument(format!(
                "sweep sizes must be at least 10, got {n}"
            )));
        }
        if self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "sweep sizes must be strictly ascending".into(),
            ));
        }
        if self.repeats == 0 {
            return Err(Error::InvalidArgument("repeats must be at least 1".into()));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "noise sd must be finite and nonnegative, got {}",
                self.noise_sd
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub n: usize,
    pub repeat: usize,
    /// Leaf budget (tree) or hidden units (network) used.
    pub capacity: usize,
    /// Fitted leaf count; equals `capacity` for networks.
    pub realized: usize,
    pub train_risk: f64,
    pub holdout_risk: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Decreasing,
    NotDecreasing,
    InsufficientPoints,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Decreasing => "decreasing",
            Verdict::NotDecreasing => "not decreasing",
            Verdict::InsufficientPoints => "insufficient points",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Ordered by `(n, repeat)`.
    pub records: Vec<SweepRecord>,
}

pub const CSV_HEADER: &str = "n,repeat,capacity,train_risk,holdout_risk";

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len();
    if m % 2 == 1 {
        values[m / 2]
    } else {
        0.5 * (values[m / 2 - 1] + values[m / 2])
    }
}

impl SweepResult {
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes: Vec<usize> = self.records.iter().map(|r| r.n).collect();
        sizes.dedup();
        sizes
    }

    /// `(n, median holdout risk over repeats)` for each size.
    pub fn median_holdout(&self) -> Vec<(usize, f64)> {
        self.sizes()
            .into_iter()
            .map(|n| {
                let mut v: Vec<f64> = self
                    .records
                    .iter()
                    .filter(|r| r.n == n)
                    .map(|r| r.holdout_risk)
                    .collect();
                (n, median(&mut v))
            })
            .collect()
    }

    /// Whether median holdout risk strictly decreases from size to size.
    pub fn verdict(&self) -> Verdict {
        let medians = self.median_holdout();
        if medians.len() < 2 {
            Verdict::InsufficientPoints
        } else if medians.windows(2).all(|w| w[1].1 < w[0].1) {
            Verdict::Decreasing
        } else {
            Verdict::NotDecreasing
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{CSV_HEADER}");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.n, r.repeat, r.capacity, r.train_risk, r.holdout_risk
            );
        }
        out
    }
}

fn mix(seed: u64, n: usize, repeat: usize, stream: u64) -> u64 {
    // splitmix64 finalizer over the cell coordinates
    let mut z = seed
        ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (repeat as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
        ^ stream.wrapping_mul(0x1656_67B1_9E37_79F9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn holdout_risk(generator: Generator, n: usize, seed: u64, predict: impl Fn(&[f64]) -> f64) -> f64 {
    let p = generator.dim();
    let m = HOLDOUT_FACTOR * n;
    let xs = generator.sample_inputs(m, &mut ChaCha8Rng::seed_from_u64(seed));
    xs.chunks_exact(p)
        .map(|x| (predict(x) - generator.mean(x)).powi(2))
        .sum::<f64>()
        / m as f64
}

fn run_cells<F>(spec: &SweepSpec, cell: F) -> Result<SweepResult>
where
    F: Fn(usize, usize) -> Result<SweepRecord> + Sync,
{
    spec.validate()?;
    let cells: Vec<(usize, usize)> = spec
        .sizes
        .iter()
        .flat_map(|&n| (0..spec.repeats).map(move |r| (n, r)))
        .collect();
    let records = cells
        .par_iter()
        .map(|&(n, r)| cell(n, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { records })
}

fn training_set(spec: &SweepSpec, n: usize, repeat: usize) -> Result<crate::dataset::Dataset> {
    synthesize(&SynthSpec {
        generator: spec.generator,
        n,
        noise_sd: spec.noise_sd,
        seed: mix(spec.seed, n, repeat, 1),
    })
}

/// Best-first trees with `max_leaves = leaf_schedule(n, spec.schedule)`.
pub fn run_tree_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    run_cells(spec, |n, repeat| {
        let train = training_set(spec, n, repeat)?;
        let capacity = leaf_schedule(n, spec.schedule)?;
        let cfg = TreeConfig {
            minsplit_fraction: spec.minsplit_fraction,
            max_leaves: Some(capacity),
            min_impurity_decrease: 0.0,
            seed: spec.seed,
        };
        let tree = fit_tree(&train, &cfg)?;
        let train_risk = train
            .rows()
            .zip(train.targets())
            .map(|(x, y)| (tree.route(x).0 - y).powi(2))
            .sum::<f64>()
            / n as f64;
        let holdout = holdout_risk(spec.generator, n, mix(spec.seed, n, repeat, 2), |x| {
            tree.route(x).0
        });
        Ok(SweepRecord {
            n,
            repeat,
            capacity,
            realized: tree.leaf_count,
            train_risk,
            holdout_risk: holdout,
        })
    })
}

/// Networks with `k = hidden_count_auto(n, p)` and `β = auto`.
pub fn run_mlp_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    run_cells(spec, |n, repeat| {
        let train = training_set(spec, n, repeat)?;
        let k = hidden_count_auto(n, train.p())?;
        let cfg = MlpConfig {
            hidden: HiddenCount::Fixed(k),
            beta: WeightBound::Auto,
            seed: mix(spec.seed, n, repeat, 3),
            ..spec.mlp.clone()
        };
        let model = fit_mlp(&train, &cfg)?;
        let holdout = holdout_risk(spec.generator, n, mix(spec.seed, n, repeat, 2), |x| {
            model.predict(x).expect("generator dimension matches")
        });
        Ok(SweepRecord {
            n,
            repeat,
            capacity: k,
            realized: k,
            train_risk: model.training_risk,
            holdout_risk: holdout,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation() {
        let mut s = SweepSpec::new(Generator::AxisSteps, vec![200, 100]);
        assert!(s.validate().is_err());
        s.sizes = vec![5, 100];
        assert!(s.validate().is_err());
        s.sizes = vec![];
        assert!(s.validate().is_err());
        s.sizes = vec![100];
        s.repeats = 0;
        assert!(s.validate().is_err());
        s.repeats = 1;
        assert!(s.validate().is_ok());
    }

    #[test]
    fn verdicts() {
        let rec = |n, h| SweepRecord {
            n,
            repeat: 0,
            capacity: 1,
            realized: 1,
            train_risk: 0.0,
            holdout_risk: h,
        };
        let one = SweepResult {
            records: vec![rec(100, 1.0)],
        };
        assert_eq!(one.verdict(), Verdict::InsufficientPoints);
        let down = SweepResult {
            records: vec![rec(100, 1.0), rec(200, 0.5)],
        };
        assert_eq!(down.verdict(), Verdict::Decreasing);
        let flat = SweepResult {
            records: vec![rec(100, 1.0), rec(200, 1.0)],
        };
        assert_eq!(flat.verdict(), Verdict::NotDecreasing);
        assert_eq!(
            Verdict::InsufficientPoints.to_string(),
            "insufficient points"
        );
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn sublog_ratio_shrinks_by_decade() {
        for n0 in [20usize, 50, 300] {
            let ratios: Vec<f64> = (0..3)
                .map(|j| {
                    let n = n0 * 10usize.pow(j);
                    leaf_schedule(n, LeafSchedule::Sublog).unwrap() as f64 / n as f64
                })
                .collect();
            assert!(ratios.windows(2).all(|w| w[1] < w[0]), "{ratios:?}");
        }
    }

    #[test]
    fn tree_sweep_is_reproducible_and_respects_budget() {
        let mut spec = SweepSpec::new(Generator::AxisSteps, vec![100]);
        spec.repeats = 1;
        let a = run_tree_sweep(&spec).unwrap();
        let b = run_tree_sweep(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_csv(), b.to_csv());
        assert!(a
            .to_csv()
            .starts_with("n,repeat,capacity,train_risk,holdout_risk\n"));
        spec.schedule = LeafSchedule::LinearViolation;
        spec.sizes = vec![50, 200];
        spec.repeats = 2;
        for r in run_tree_sweep(&spec).unwrap().records {
            assert!(r.realized <= r.capacity);
            assert!(r.train_risk >= 0.0 && r.holdout_risk >= 0.0);
        }
    }
}
