use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rtann::dataset::read_table;
use rtann::hybrid::explain;
use rtann::model::fit_model;
use rtann::*;

mod config;

#[derive(Parser)]
#[command(
    name = "rtann",
    version,
    about = "Regression trees, bounded one-layer networks and their hybrid",
    args_override_self = true,
    after_help = "Any command also accepts --config FILE with key=value lines; flags given on the command line win."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset to CSV
    Synth(SynthArgs),
    /// Fit one model and save it as JSON
    Train(TrainArgs),
    /// Predict with a saved model
    Predict(PredictArgs),
    /// Score a saved model on labelled data
    Evaluate(EvaluateArgs),
    /// Compare all model kinds under one split
    Benchmark(BenchmarkArgs),
    /// Risk-versus-n sweep on a synthetic generator
    Sweep(SweepArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// axis-steps, friedman-like or linear
    #[arg(long)]
    generator: Generator,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Minimum node size as a fraction of the training rows
    #[arg(long, default_value_t = 0.10)]
    minsplit: f64,
    #[arg(long)]
    max_leaves: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    min_impurity_decrease: f64,
    /// Hidden units: auto or a positive integer
    #[arg(long, default_value = "auto")]
    hidden: HiddenCount,
    /// Output weight bound: auto or a positive number
    #[arg(long, default_value = "auto")]
    beta: WeightBound,
    #[arg(long, default_value_t = 0.05)]
    learning_rate: f64,
    #[arg(long, default_value_t = 4000)]
    max_epochs: usize,
    #[arg(long, default_value_t = 1e-12)]
    tolerance: f64,
    /// Hybrid feature selection: used or top-<m>
    #[arg(long, default_value = "used")]
    selection: SelectionRule,
    /// PLS components (default min(2, p))
    #[arg(long)]
    pls_components: Option<usize>,
}

impl ModelArgs {
    fn options(&self, seed: u64) -> ModelOptions {
        ModelOptions {
            tree: TreeConfig {
                minsplit_fraction: self.minsplit,
                max_leaves: self.max_leaves,
                min_impurity_decrease: self.min_impurity_decrease,
                seed,
            },
            mlp: MlpConfig {
                hidden: self.hidden,
                beta: self.beta,
                learning_rate: self.learning_rate,
                max_epochs: self.max_epochs,
                tolerance: self.tolerance,
                seed,
            },
            selection: self.selection,
            pls_components: self.pls_components,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    target: String,
    /// hybrid, tree, mlp, ols, stepwise or pls
    #[arg(long)]
    model: ModelKind,
    /// Model file to write
    #[arg(long)]
    out: PathBuf,
    /// Also write the report here
    #[arg(long)]
    report: Option<PathBuf>,
    /// Hold out this fraction and fit on the rest
    #[arg(long)]
    test_fraction: Option<f64>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[command(flatten)]
    model_args: ModelArgs,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// CSV whose columns are matched to the model by name
    #[arg(long)]
    data: PathBuf,
    /// Defaults to stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    /// CSV holding the model's features and its target column
    #[arg(long)]
    data: PathBuf,
    /// Also write the metrics as CSV
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    target: String,
    #[arg(long, conflicts_with = "folds")]
    test_fraction: Option<f64>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Write in_sample.csv and holdout.csv here
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[command(flatten)]
    model_args: ModelArgs,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum SweepModel {
    Tree,
    Mlp,
}

#[derive(Clone, Debug)]
struct Sizes(Vec<usize>);

fn parse_sizes(s: &str) -> std::result::Result<Sizes, String> {
    let sizes = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("'{t}' is not a size"))
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err("sizes must be strictly ascending".into());
    }
    if let Some(n) = sizes.iter().find(|&&n| n < 10) {
        return Err(format!("sizes must be at least 10, got {n}"));
    }
    Ok(Sizes(sizes))
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum)]
    kind: SweepModel,
    #[arg(long)]
    generator: Generator,
    /// Comma-separated, strictly ascending
    #[arg(long, value_parser = parse_sizes)]
    sizes: Sizes,
    /// sublog or linear-violation (tree sweeps)
    #[arg(long, default_value = "sublog")]
    schedule: LeafSchedule,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Tree minimum node size fraction
    #[arg(long, default_value_t = 0.01)]
    minsplit: f64,
    #[arg(long, default_value_t = 0.05)]
    learning_rate: f64,
    #[arg(long, default_value_t = 4000)]
    max_epochs: usize,
    /// Sweep CSV to write
    #[arg(long)]
    out: Option<PathBuf>,
}

fn write_output(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn synth(args: SynthArgs) -> Result<String> {
    let ds = synthesize(&SynthSpec {
        generator: args.generator,
        n: args.n,
        noise_sd: args.noise,
        seed: args.seed,
    })?;
    write_csv(&ds, &args.out)?;
    Ok(format!(
        "wrote {} rows of {} to {}\n",
        ds.n(),
        args.generator,
        args.out.display()
    ))
}

fn metrics_rows(model: &Model, sets: &[(&str, &Dataset)]) -> Result<ComparisonTable> {
    let rows = sets
        .iter()
        .map(|(label, ds)| {
            let yhat = model.predict_dataset(ds)?;
            Ok(TableRow::new(
                *label,
                evaluate(ds.targets(), &yhat, model.predictor_count())?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(comparison_table(&rows))
}

fn summary(model: &Model) -> String {
    let mut s = String::new();
    match model {
        Model::Hybrid(h) => s.push_str(&explain(h)),
        Model::Tree(t) => {
            let _ = writeln!(s, "leaves: {}", t.leaf_count);
            let _ = writeln!(s, "depth: {}", t.depth());
        }
        Model::Mlp(m) => {
            let _ = writeln!(s, "hidden units: {}", m.hidden_count());
            let _ = writeln!(s, "beta: {}", m.beta);
            let _ = writeln!(s, "training risk: {}", m.training_risk);
            let _ = writeln!(s, "epochs: {}", m.epochs);
        }
        Model::Ols(l) | Model::Stepwise(l) | Model::Pls(l) => {
            let _ = writeln!(s, "intercept: {}", l.intercept);
            let _ = writeln!(s, "coefficients: {:?}", l.coefficients);
            if let Some(a) = l.components {
                let _ = writeln!(s, "components: {a}");
            }
            if l.rank_deficient {
                let _ = writeln!(s, "rank deficient: dependent columns set to zero");
            }
        }
    }
    s
}

fn train(args: TrainArgs) -> Result<String> {
    let ds = load_csv(&args.data, &args.target)?;
    let opts = args.model_args.options(args.seed);
    let (train, test) = match args.test_fraction {
        Some(f) => {
            let plan = split(&ds, f, args.seed)?;
            (
                ds.subset(&plan.train_indices)?,
                Some(ds.subset(&plan.test_indices)?),
            )
        }
        None => (ds.clone(), None),
    };
    let model = fit_model(args.model, &train, &opts)?;
    model.to_file(ds.column_names().to_vec())?.save(&args.out)?;

    let mut report = String::new();
    let _ = writeln!(report, "model: {}", args.model);
    let _ = writeln!(report, "training rows: {}", train.n());
    report.push_str(&summary(&model));
    let mut sets = vec![("in-sample", &train)];
    if let Some(test) = &test {
        sets.push(("holdout", test));
    }
    report.push_str(&metrics_rows(&model, &sets)?.text);
    if test.is_none() {
        report.push_str("holdout: not computed, all rows used for fitting (see --test-fraction)\n");
    }
    if let Some(path) = &args.report {
        write_output(path, &report)?;
    }
    Ok(report)
}

fn predict(args: PredictArgs) -> Result<String> {
    let file = ModelFile::load(&args.model)?;
    let table = read_table(fs::File::open(&args.data).map_err(|source| Error::Io {
        path: args.data.clone(),
        source,
    })?)?;
    let rows = file.feature_rows(&table)?;
    let model = file.into_model()?;
    let mut out = String::from("prediction\n");
    for row in &rows {
        let _ = writeln!(out, "{}", model.predict(row)?);
    }
    match &args.out {
        Some(path) => {
            write_output(path, &out)?;
            Ok(String::new())
        }
        None => Ok(out),
    }
}

fn evaluate_cmd(args: EvaluateArgs) -> Result<String> {
    let file = ModelFile::load(&args.model)?;
    let target = file
        .target_name()
        .ok_or_else(|| Error::Schema("model file has an empty schema".into()))?
        .to_string();
    let table = load_table(&args.data)?;
    let target_idx = table
        .column_index(&target)
        .map_err(|_| Error::Schema(format!("missing column '{target}'")))?;
    let rows = file.feature_rows(&table)?;
    let y: Vec<f64> = table.rows.iter().map(|r| r[target_idx]).collect();
    let kind = file.kind.clone();
    let model = file.into_model()?;
    let yhat = rows
        .iter()
        .map(|r| model.predict(r))
        .collect::<Result<Vec<_>>>()?;
    let table = comparison_table(&[TableRow::new(
        kind,
        evaluate(&y, &yhat, model.predictor_count())?,
    )]);
    if let Some(path) = &args.csv {
        write_output(path, &table.csv)?;
    }
    Ok(table.text)
}

fn benchmark(args: BenchmarkArgs) -> Result<String> {
    let ds = load_csv(&args.data, &args.target)?;
    let protocol = match (args.test_fraction, args.folds) {
        (_, Some(folds)) => Protocol::KFold { folds },
        (Some(f), None) => Protocol::Holdout { test_fraction: f },
        (None, None) => Protocol::Holdout { test_fraction: 0.3 },
    };
    let report = run_benchmark(
        &ds,
        protocol,
        args.seed,
        &args.model_args.options(args.seed),
    )?;
    let (in_sample, holdout) = (report.in_sample_table(), report.holdout_table());
    let mut out = String::new();
    match protocol {
        Protocol::Holdout { test_fraction } => {
            let _ = writeln!(
                out,
                "protocol: holdout, test fraction {test_fraction}, seed {}",
                args.seed
            );
            let _ = writeln!(out, "\nin-sample (training split)");
        }
        Protocol::KFold { folds } => {
            let _ = writeln!(
                out,
                "protocol: {folds}-fold cross-validation, seed {}",
                args.seed
            );
            let _ = writeln!(out, "\nin-sample (fit on all rows)");
        }
    }
    out.push_str(&in_sample.text);
    let _ = writeln!(
        out,
        "\n{}",
        match protocol {
            Protocol::Holdout { .. } => "holdout (test split)",
            Protocol::KFold { .. } => "holdout (pooled out-of-fold predictions)",
        }
    );
    out.push_str(&holdout.text);
    for o in &report.outcomes {
        if let Some(e) = &o.error {
            let _ = writeln!(out, "{} failed: {e}", o.kind);
        }
    }
    let _ = writeln!(out, "\n{MARS_NOTE}");
    if let Some(dir) = &args.out_dir {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.clone(),
            source,
        })?;
        write_output(&dir.join("in_sample.csv"), &in_sample.csv)?;
        write_output(&dir.join("holdout.csv"), &holdout.csv)?;
    }
    Ok(out)
}

fn sweep(args: SweepArgs) -> Result<String> {
    let spec = SweepSpec {
        generator: args.generator,
        sizes: args.sizes.0,
        schedule: args.schedule,
        repeats: args.repeats,
        noise_sd: args.noise,
        seed: args.seed,
        minsplit_fraction: args.minsplit,
        mlp: MlpConfig {
            learning_rate: args.learning_rate,
            max_epochs: args.max_epochs,
            ..MlpConfig::default()
        },
    };
    let result = match args.kind {
        SweepModel::Tree => run_tree_sweep(&spec)?,
        SweepModel::Mlp => run_mlp_sweep(&spec)?,
    };
    if let Some(path) = &args.out {
        write_output(path, &result.to_csv())?;
    }
    let mut out = String::new();
    for (n, risk) in result.median_holdout() {
        let _ = writeln!(out, "n={n} median holdout risk {risk:.6}");
    }
    let _ = writeln!(out, "verdict: {}", result.verdict());
    Ok(out)
}

fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Synth(a) => synth(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Benchmark(a) => benchmark(a),
        Command::Sweep(a) => sweep(a),
    }
}

fn main() -> ExitCode {
    let args: Vec<OsString> = std::env::args_os().collect();
    let args = match config::expand(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(args);
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
