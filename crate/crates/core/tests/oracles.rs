//! Checks against independent re-computations and paired-run experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rtann::mlp::fit_mlp_with_callback;
use rtann::model::fit_model;
use rtann::*;

fn synth(generator: Generator, n: usize, noise_sd: f64, seed: u64) -> Dataset {
    synthesize(&SynthSpec {
        generator,
        n,
        noise_sd,
        seed,
    })
    .unwrap()
}

fn rmse(pred: &[f64], y: &[f64]) -> f64 {
    (pred
        .iter()
        .zip(y)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        / y.len() as f64)
        .sqrt()
}

fn holdout(ds: &Dataset, seed: u64) -> (Dataset, Dataset) {
    let plan = SplitPlan::holdout(ds.n(), 0.3, seed).unwrap();
    (
        ds.subset(&plan.train_indices).unwrap(),
        ds.subset(&plan.test_indices).unwrap(),
    )
}

// --- network ---------------------------------------------------------------

/// Unclamped risk written out directly from the model formula.
fn desk_risk(params: &[f64], k: usize, d: usize, z: &[Vec<f64>], y: &[f64]) -> f64 {
    let a = &params[..k * d];
    let b = &params[k * d..k * d + k];
    let c = &params[k * d + k..k * d + 2 * k];
    let c0 = params[k * d + 2 * k];
    let mut total = 0.0;
    for (zi, yi) in z.iter().zip(y) {
        let mut f = c0;
        for i in 0..k {
            let pre: f64 = (0..d).map(|j| a[i * d + j] * zi[j]).sum::<f64>() + b[i];
            f += c[i] / (1.0 + (-pre).exp());
        }
        total += (f - yi).powi(2);
    }
    total / y.len() as f64
}

#[test]
fn gradient_matches_central_differences() {
    let (k, d, n, h) = (3, 2, 16, 1e-5);
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let ds = Dataset::new(vec!["a".into(), "b".into(), "y".into()], rows, y, None).unwrap();
        let st = Standardization::fit(&ds).unwrap();
        let mut u = || rng.random_range(-1.5..1.5);
        let model = MlpModel::new(
            (0..k).map(|_| (0..d).map(|_| u()).collect()).collect(),
            (0..k).map(|_| u()).collect(),
            (0..k).map(|_| u()).collect(),
            u(),
            100.0,
            st.clone(),
            ds.response_bound(),
        )
        .unwrap();
        let z: Vec<Vec<f64>> = ds.rows().map(|r| st.apply(r)).collect();
        let analytic = risk_gradient(&model, &ds).unwrap().flatten();
        let theta: Vec<f64> = model
            .hidden_weights
            .iter()
            .flatten()
            .chain(&model.hidden_biases)
            .chain(&model.output_weights)
            .copied()
            .chain([model.output_bias])
            .collect();
        assert_eq!(theta.len(), analytic.len());
        let mut worst: f64 = 0.0;
        for i in 0..theta.len() {
            let (mut up, mut down) = (theta.clone(), theta.clone());
            up[i] += h;
            down[i] -= h;
            let fd = (desk_risk(&up, k, d, &z, ds.targets())
                - desk_risk(&down, k, d, &z, ds.targets()))
                / (2.0 * h);
            let rel = (analytic[i] - fd).abs() / analytic[i].abs().max(fd.abs()).max(1e-3);
            worst = worst.max(rel);
        }
        assert!(worst < 1e-5, "seed {seed}: max relative error {worst}");
    }
}

#[test]
fn small_steps_decrease_the_risk() {
    let ds = synth(Generator::Linear, 200, 0.5, 8);
    let cfg = MlpConfig {
        learning_rate: 1e-3,
        max_epochs: 2000,
        tolerance: 0.0,
        ..MlpConfig::default()
    };
    let mut risks = Vec::new();
    fit_mlp_with_callback(&ds, &cfg, |m, _| risks.push(m.training_risk)).unwrap();
    let rises: Vec<f64> = risks
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d > 0.0)
        .collect();
    assert!(rises.len() * 100 <= risks.len(), "{} rises", rises.len());
    assert!(rises.iter().all(|d| *d < 1e-9), "{rises:?}");
    assert!(risks.last().unwrap() < &risks[0]);
}

#[test]
fn network_approximates_a_linear_target() {
    let ds = synth(Generator::Linear, 500, 0.0, 21);
    let (train, test) = holdout(&ds, 21);
    let model = fit_mlp(&train, &MlpConfig::default()).unwrap();
    let pred: Vec<f64> = test.rows().map(|r| model.predict(r).unwrap()).collect();
    let err = rmse(&pred, test.targets());
    // the build's own OLS is the oracle here: its holdout RMSE is zero
    let ols = fit_model(ModelKind::Ols, &train, &Default::default()).unwrap();
    let ols_err = rmse(&ols.predict_dataset(&test).unwrap(), test.targets());
    assert!(ols_err < 1e-9);
    assert!(err <= ols_err + 0.5, "network holdout RMSE {err}");
}

#[test]
fn hidden_width_grows_with_n_in_sweeps() {
    let mut spec = SweepSpec::new(Generator::FriedmanLike, vec![200, 800]);
    spec.repeats = 1;
    spec.mlp.max_epochs = 50;
    let result = run_mlp_sweep(&spec).unwrap();
    let ks: Vec<usize> = result.records.iter().map(|r| r.capacity).collect();
    assert!(ks.windows(2).all(|w| w[0] <= w[1]), "{ks:?}");
    assert_eq!(hidden_count_auto(3200, 5).unwrap(), 9);
    for r in &result.records {
        assert!(r.train_risk.is_finite() && r.holdout_risk.is_finite());
        assert!(r.train_risk >= 0.0 && r.holdout_risk >= 0.0);
    }
}

// --- hybrid ------------------------------------------------------------------

fn desk_tree(node: &TreeNode, x: &[f64]) -> f64 {
    match node {
        TreeNode::Leaf { prediction, .. } => *prediction,
        TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        } => desk_tree(
            if x[*feature] <= *threshold {
                left
            } else {
                right
            },
            x,
        ),
    }
}

#[test]
fn hybrid_matches_desk_recomputation() {
    let ds = synth(Generator::FriedmanLike, 300, 1.0, 12);
    let model = fit_hybrid(&ds, &HybridConfig::default()).unwrap();
    let mlp = &model.mlp;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..200 {
        let x: Vec<f64> = (0..5).map(|_| rng.random::<f64>()).collect();
        let mut input: Vec<f64> = model.selected.iter().map(|&j| x[j]).collect();
        input.push(desk_tree(&model.tree.root, &x));
        let z: Vec<f64> = input
            .iter()
            .enumerate()
            .map(|(j, v)| {
                if mlp.standardization.constant[j] {
                    0.0
                } else {
                    (v - mlp.standardization.means[j]) / mlp.standardization.sds[j]
                }
            })
            .collect();
        let mut f = mlp.output_bias;
        for i in 0..mlp.hidden_count() {
            let pre: f64 = mlp.hidden_weights[i]
                .iter()
                .zip(&z)
                .map(|(a, v)| a * v)
                .sum::<f64>()
                + mlp.hidden_biases[i];
            f += mlp.output_weights[i] / (1.0 + (-pre).exp());
        }
        let f = f.clamp(-model.response_bound, model.response_bound);
        let got = predict_hybrid(&model, &x).unwrap();
        assert!((got - f).abs() <= 1e-12 * f.abs().max(1.0), "{got} vs {f}");
    }
}

#[test]
fn hybrid_is_equivariant_under_column_permutation() {
    let ds = synth(Generator::FriedmanLike, 200, 1.0, 4);
    let perm = [3, 0, 4, 2, 1];
    let names: Vec<String> = perm
        .iter()
        .map(|&j| ds.feature_names()[j].clone())
        .chain([ds.target_name().to_string()])
        .collect();
    let rows: Vec<Vec<f64>> = ds
        .rows()
        .map(|r| perm.iter().map(|&j| r[j]).collect())
        .collect();
    let permuted = Dataset::new(
        names,
        rows,
        ds.targets().to_vec(),
        Some(ds.response_bound()),
    )
    .unwrap();
    let cfg = HybridConfig::default();
    let a = fit_hybrid(&ds, &cfg).unwrap();
    let b = fit_hybrid(&permuted, &cfg).unwrap();
    let mapped: Vec<usize> = b.selected.iter().map(|&j| perm[j]).collect();
    assert_eq!(a.selected, mapped);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let x: Vec<f64> = (0..5).map(|_| rng.random::<f64>()).collect();
        let xp: Vec<f64> = perm.iter().map(|&j| x[j]).collect();
        let (pa, pb) = (a.predict(&x).unwrap(), b.predict(&xp).unwrap());
        assert!((pa - pb).abs() <= 1e-12 * pa.abs().max(1.0), "{pa} vs {pb}");
    }
}

#[test]
fn hybrid_holds_its_own_against_the_tree_on_steps() {
    let mut wins = 0;
    for seed in 0..10u64 {
        let ds = synth(Generator::AxisSteps, 400, 0.5, 300 + seed);
        let (train, test) = holdout(&ds, seed);
        let opts = model::ModelOptions::default().with_seed(seed);
        let tree = fit_model(ModelKind::Tree, &train, &opts).unwrap();
        let hybrid = fit_model(ModelKind::Hybrid, &train, &opts).unwrap();
        let rt = rmse(&tree.predict_dataset(&test).unwrap(), test.targets());
        let rh = rmse(&hybrid.predict_dataset(&test).unwrap(), test.targets());
        if rh <= rt {
            wins += 1;
        }
    }
    assert!(wins >= 7, "hybrid <= tree in {wins}/10 seeds");
}

#[test]
fn hybrid_ranks_in_the_top_two_on_friedman() {
    let mut per_model: Vec<Vec<f64>> = vec![Vec::new(); 6];
    for seed in 0..10u64 {
        let ds = synth(Generator::FriedmanLike, 500, 1.0, seed);
        let report = run_benchmark(
            &ds,
            Protocol::Holdout { test_fraction: 0.3 },
            seed,
            &Default::default(),
        )
        .unwrap();
        for (slot, kind) in ModelKind::ALL.iter().enumerate() {
            per_model[slot].push(report.outcome(*kind).holdout.as_ref().unwrap().rmse);
        }
    }
    let medians: Vec<f64> = per_model
        .iter_mut()
        .map(|v| {
            v.sort_by(f64::total_cmp);
            0.5 * (v[4] + v[5])
        })
        .collect();
    let hybrid = medians[5];
    let better = medians.iter().filter(|m| **m < hybrid).count();
    assert!(better <= 1, "median holdout RMSE by model {medians:?}");
}

// --- trees on noiseless steps -----------------------------------------------

/// With no noise the tree cuts `x1` once, at the midpoint `θ` of the two
/// samples straddling 0.5; fresh points between `θ` and 0.5 are off by 10,
/// so the risk against `m` is `100 · |θ − 0.5|`.
#[test]
fn noiseless_step_risk_is_the_misrouted_mass() {
    for (n, seed) in [(200usize, 1u64), (800, 2), (3200, 3)] {
        let ds = synth(Generator::AxisSteps, n, 0.0, seed);
        let cfg = TreeConfig {
            minsplit_fraction: 0.01,
            max_leaves: Some(leaf_schedule(n, LeafSchedule::Sublog).unwrap()),
            ..TreeConfig::default()
        };
        let tree = fit_tree(&ds, &cfg).unwrap();
        assert_eq!(tree.leaf_count, 2);
        let theta = match tree.root {
            TreeNode::Split {
                feature: 0,
                threshold,
                ..
            } => threshold,
            ref other => panic!("unexpected root {other:?}"),
        };
        let expected = 100.0 * (theta - 0.5).abs();
        let m = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs = Generator::AxisSteps.sample_inputs(m, &mut rng);
        let risk = xs
            .chunks_exact(2)
            .map(|x| (tree.route(x).0 - Generator::AxisSteps.mean(x)).powi(2))
            .sum::<f64>()
            / m as f64;
        let q = expected / 100.0;
        let sd = 100.0 * (q * (1.0 - q) / m as f64).sqrt();
        assert!(
            (risk - expected).abs() <= 4.0 * sd + 1e-12,
            "n={n}: {risk} vs {expected}"
        );
    }
}

#[test]
#[ignore = "the midpoint cut misroutes ~1/(2n) of the mass at cost 100, so the risk is ~0.25 at n=200"]
fn noiseless_step_sweep_below_one_hundredth() {
    let mut spec = SweepSpec::new(Generator::AxisSteps, vec![200, 800, 3200]);
    spec.noise_sd = 0.0;
    spec.repeats = 1;
    for r in run_tree_sweep(&spec).unwrap().records {
        assert!(r.holdout_risk < 0.01, "n={}: {}", r.n, r.holdout_risk);
    }
}
