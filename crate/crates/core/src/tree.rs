//! Binary axis-parallel regression tree fitted by greedy squared-error
//! reduction.
//!
//! Growth is best-first: the frontier node whose best split removes the most
//! squared error is split next. A node becomes a leaf when it holds fewer than
//! `α = ⌈minsplit_fraction · n⌉` samples, when its targets are all equal, when
//! no split clears `min_impurity_decrease`, or when the leaf budget is spent.
//! Leaves predict the mean of their training targets. Without a leaf budget
//! the growth order does not affect the final tree.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub minsplit_fraction: f64,
    pub max_leaves: Option<usize>,
    pub min_impurity_decrease: f64,
    pub seed: u64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            minsplit_fraction: 0.10,
            max_leaves: None,
            min_impurity_decrease: 0.0,
            seed: 42,
        }
    }
}

impl TreeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.minsplit_fraction > 0.0 && self.minsplit_fraction <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "minsplit fraction must lie in (0, 1], got {}",
                self.minsplit_fraction
            )));
        }
        if self.max_leaves == Some(0) {
            return Err(Error::InvalidArgument(
                "max_leaves must be at least 1".into(),
            ));
        }
        if !(self.min_impurity_decrease >= 0.0 && self.min_impurity_decrease.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "min_impurity_decrease must be finite and nonnegative, got {}",
                self.min_impurity_decrease
            )));
        }
        Ok(())
    }

    /// `α`: nodes with fewer samples than this are never split.
    pub fn minsplit_count(&self, n: usize) -> usize {
        ((self.minsplit_fraction * n as f64).ceil() as usize).max(1)
    }
}

/// Serialized as nested `{feature, threshold, left, right}` and
/// `{prediction, count}` objects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        prediction: f64,
        count: usize,
    },
}

impl TreeNode {
    fn leaves(&self) -> Vec<(f64, usize)> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            match node {
                TreeNode::Leaf { prediction, count } => out.push((*prediction, *count)),
                TreeNode::Split { left, right, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        out
    }

    fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub root: TreeNode,
    /// Total squared-error reduction credited to each feature.
    pub importance: Vec<f64>,
    pub leaf_count: usize,
    pub response_bound: f64,
    pub config: TreeConfig,
}

impl TreeModel {
    /// A single leaf predicting `value` for every input.
    pub fn constant(value: f64, n_features: usize, count: usize, response_bound: f64) -> Self {
        Self {
            root: TreeNode::Leaf {
                prediction: value.clamp(-response_bound, response_bound),
                count,
            },
            importance: vec![0.0; n_features],
            leaf_count: 1,
            response_bound,
            config: TreeConfig::default(),
        }
    }

    pub fn n_features(&self) -> usize {
        self.importance.len()
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// `(prediction, count)` for every leaf, left to right.
    pub fn leaves(&self) -> Vec<(f64, usize)> {
        self.root.leaves()
    }

    /// Leaf prediction together with the number of threshold comparisons made.
    /// Assumes `x` has the model's dimension.
    pub fn route(&self, x: &[f64]) -> (f64, usize) {
        let mut node = &self.root;
        let mut comparisons = 0;
        loop {
            match node {
                TreeNode::Leaf { prediction, .. } => return (*prediction, comparisons),
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    comparisons += 1;
                    node = if x[*feature] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                got: x.len(),
            });
        }
        Ok(self.route(x).0)
    }
}

pub fn predict_tree(model: &TreeModel, x: &[f64]) -> Result<f64> {
    model.predict(x)
}

pub fn feature_importance(model: &TreeModel) -> Vec<f64> {
    model.importance.clone()
}

#[derive(Debug, Clone)]
struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
    left: Vec<usize>,
    right: Vec<usize>,
}

struct Building {
    indices: Vec<usize>,
    mean: f64,
    children: Option<(usize, usize, usize, f64)>,
}

#[derive(Debug)]
struct Frontier {
    gain: f64,
    node: usize,
}

impl PartialEq for Frontier {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Frontier {}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Frontier {
    // Max-heap on gain; among equal gains the older node wins.
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.node.cmp(&self.node))
    }
}

fn mean_and_sse(ys: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let mut count = 0usize;
    let mut sum = 0.0;
    for y in ys.clone() {
        sum += y;
        count += 1;
    }
    let mean = sum / count as f64;
    let sse = ys.map(|y| (y - mean) * (y - mean)).sum();
    (mean, sse)
}

/// Exhaustive search over features and midpoints of consecutive distinct
/// values. Gains within a relative `1e-10` of the incumbent count as ties,
/// which go to the lower feature index and then the lower threshold.
fn best_split(ds: &Dataset, indices: &[usize], node_mean: f64, node_sse: f64) -> Option<Candidate> {
    let m = indices.len();
    if m < 2 {
        return None;
    }
    let y = ds.targets();
    let tol = 1e-10 * node_sse;
    let mut best: Option<(usize, f64, f64, usize)> = None;
    let mut order = indices.to_vec();
    for j in 0..ds.p() {
        order.copy_from_slice(indices);
        order.sort_by(|&a, &b| ds.value(a, j).total_cmp(&ds.value(b, j)).then(a.cmp(&b)));
        let (mut sum_l, mut sq_l) = (0.0, 0.0);
        let (sum_t, sq_t) = order.iter().fold((0.0, 0.0), |(s, q), &i| {
            let c = y[i] - node_mean;
            (s + c, q + c * c)
        });
        for pos in 0..m - 1 {
            let c = y[order[pos]] - node_mean;
            sum_l += c;
            sq_l += c * c;
            let lo = ds.value(order[pos], j);
            let hi = ds.value(order[pos + 1], j);
            if lo == hi {
                continue;
            }
            let nl = (pos + 1) as f64;
            let nr = (m - pos - 1) as f64;
            let sse_l = sq_l - sum_l * sum_l / nl;
            let sum_r = sum_t - sum_l;
            let sse_r = (sq_t - sq_l) - sum_r * sum_r / nr;
            let gain = node_sse - sse_l - sse_r;
            if best.is_none_or(|(_, _, g, _)| gain > g + tol) {
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some((j, threshold, gain, pos + 1));
            }
        }
    }
    let (feature, threshold, _, _) = best?;
    let (left, right): (Vec<usize>, Vec<usize>) = indices
        .iter()
        .partition(|&&i| ds.value(i, feature) <= threshold);
    if left.is_empty() || right.is_empty() {
        return None;
    }
    // Recompute the chosen gain two-pass so importances are accurate.
    let (_, sse_l) = mean_and_sse(left.iter().map(|&i| y[i]));
    let (_, sse_r) = mean_and_sse(right.iter().map(|&i| y[i]));
    Some(Candidate {
        feature,
        threshold,
        gain: node_sse - sse_l - sse_r,
        left,
        right,
    })
}

/// Fits a tree on every row of `ds`.
pub fn fit_tree(ds: &Dataset, cfg: &TreeConfig) -> Result<TreeModel> {
    cfg.validate()?;
    let n = ds.n();
    if n == 0 {
        return Err(Error::EmptyData);
    }
    let alpha = cfg.minsplit_count(n);
    let y = ds.targets();

    let mut nodes: Vec<Building> = Vec::new();
    let mut pending: Vec<Option<Candidate>> = Vec::new();
    let mut heap = BinaryHeap::new();

    let open = |indices: Vec<usize>,
                nodes: &mut Vec<Building>,
                pending: &mut Vec<Option<Candidate>>,
                heap: &mut BinaryHeap<Frontier>| {
        let (mean, sse) = mean_and_sse(indices.iter().map(|&i| y[i]));
        let first = y[indices[0]];
        let splittable = indices.len() >= alpha && indices.iter().any(|&i| y[i] != first);
        let candidate = if splittable {
            best_split(ds, &indices, mean, sse).filter(|c| c.gain > cfg.min_impurity_decrease)
        } else {
            None
        };
        let id = nodes.len();
        if let Some(c) = &candidate {
            heap.push(Frontier {
                gain: c.gain,
                node: id,
            });
        }
        nodes.push(Building {
            indices,
            mean,
            children: None,
        });
        pending.push(candidate);
    };

    open((0..n).collect(), &mut nodes, &mut pending, &mut heap);
    let mut leaves = 1usize;
    let mut importance = vec![0.0; ds.p()];
    while let Some(Frontier { node, .. }) = heap.pop() {
        if cfg.max_leaves.is_some_and(|cap| leaves >= cap) {
            break;
        }
        let c = pending[node].take().expect("frontier node has a candidate");
        importance[c.feature] += c.gain;
        let left = nodes.len();
        open(c.left, &mut nodes, &mut pending, &mut heap);
        let right = nodes.len();
        open(c.right, &mut nodes, &mut pending, &mut heap);
        nodes[node].children = Some((left, right, c.feature, c.threshold));
        leaves += 1;
    }

    let bound = ds.response_bound();
    let root = assemble(&nodes, 0, bound);
    Ok(TreeModel {
        root,
        importance,
        leaf_count: leaves,
        response_bound: bound,
        config: cfg.clone(),
    })
}

fn assemble(nodes: &[Building], id: usize, bound: f64) -> TreeNode {
    let node = &nodes[id];
    match node.children {
        Some((l, r, feature, threshold)) => TreeNode::Split {
            feature,
            threshold,
            left: Box::new(assemble(nodes, l, bound)),
            right: Box::new(assemble(nodes, r, bound)),
        },
        None => TreeNode::Leaf {
            prediction: node.mean.clamp(-bound, bound),
            count: node.indices.len(),
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelectionRule {
    /// Every feature with positive importance.
    #[default]
    Used,
    /// The `m` most important of those.
    TopM(usize),
}

impl FromStr for SelectionRule {
    type Err = Error;

    /// Accepts `used` or `top-<m>`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "used" {
            return Ok(Self::Used);
        }
        s.strip_prefix("top-")
            .and_then(|m| m.parse().ok())
            .filter(|m: &usize| *m > 0)
            .map(Self::TopM)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown selection rule '{s}' (expected 'used' or 'top-<m>')"
                ))
            })
    }
}

impl fmt::Display for SelectionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Used => f.write_str("used"),
            Self::TopM(m) => write!(f, "top-{m}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    /// Feature indices by descending importance, ties by ascending index.
    pub indices: Vec<usize>,
    /// Set when `top-m` asked for more features than carry importance.
    pub truncated: bool,
}

pub fn select_features(model: &TreeModel, rule: SelectionRule) -> Selection {
    let imp = &model.importance;
    let mut used: Vec<usize> = (0..imp.len()).filter(|&j| imp[j] > 0.0).collect();
    used.sort_by(|&a, &b| imp[b].total_cmp(&imp[a]).then(a.cmp(&b)));
    match rule {
        SelectionRule::Used => Selection {
            indices: used,
            truncated: false,
        },
        SelectionRule::TopM(m) => {
            let truncated = m > used.len();
            used.truncate(m);
            Selection {
                indices: used,
                truncated,
            }
        }
    }
}

/// Leaf-count schedules for sample size `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafSchedule {
    /// `⌈n / (ln n)²⌉`, which is `o(n / ln n)`.
    Sublog,
    /// `⌈n / 2⌉`, growing linearly in `n`.
    LinearViolation,
}

impl LeafSchedule {
    pub fn name(self) -> &'static str {
        match self {
            Self::Sublog => "sublog",
            Self::LinearViolation => "linear-violation",
        }
    }
}

impl FromStr for LeafSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sublog" => Ok(Self::Sublog),
            "linear-violation" => Ok(Self::LinearViolation),
            other => Err(Error::InvalidArgument(format!(
                "unknown schedule '{other}' (expected 'sublog' or 'linear-violation')"
            ))),
        }
    }
}

impl fmt::Display for LeafSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn leaf_schedule(n: usize, rule: LeafSchedule) -> Result<usize> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "leaf schedule needs n >= 2, got {n}"
        )));
    }
    let nf = n as f64;
    let leaves = match rule {
        LeafSchedule::Sublog => (nf / nf.ln().powi(2)).ceil(),
        LeafSchedule::LinearViolation => (nf / 2.0).ceil(),
    };
    Ok((leaves as usize).max(1))
}
