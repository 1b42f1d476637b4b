use std::fs;
use std::path::Path;
use std::process::{Command, Output};

/// `args` is split on whitespace.
fn run(dir: &Path, args: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rtann"))
        .current_dir(dir)
        .args(args.split_whitespace())
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &str) -> String {
    let out = run(dir, args);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(out.status.success(), "{args}: {err}");
    String::from_utf8(out.stdout).unwrap()
}

fn fails(dir: &Path, args: &str) -> (i32, String) {
    let out = run(dir, args);
    assert!(!out.status.success(), "{args} unexpectedly succeeded");
    let err = String::from_utf8(out.stderr).unwrap();
    (out.status.code().unwrap(), err)
}

fn steps(dir: &Path) {
    ok(
        dir,
        "synth --generator axis-steps --n 400 --noise 0.5 --seed 3 --out steps.csv",
    );
}

fn read(dir: &Path, file: &str) -> String {
    fs::read_to_string(dir.join(file)).unwrap()
}

#[test]
fn hybrid_report_ranks_the_step_feature_first() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    steps(dir);
    let report = ok(
        dir,
        "train --data steps.csv --target y --model hybrid --out m.json --report r.txt",
    );
    let first = report
        .lines()
        .find(|l| l.trim_start().starts_with("1."))
        .unwrap();
    assert!(first.contains("x1"), "{report}");
    assert!(report.contains("network inputs d_m: 3"), "{report}");
    assert_eq!(read(dir, "r.txt"), report);
}

#[test]
fn predict_matches_columns_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    steps(dir);
    ok(
        dir,
        "train --data steps.csv --target y --model tree --out t.json",
    );
    let direct = ok(dir, "predict --model t.json --data steps.csv");
    assert!(direct.starts_with("prediction\n"));
    assert_eq!(direct.lines().count(), 401);

    // swapped feature order, no target column
    let swapped: String = read(dir, "steps.csv")
        .lines()
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            format!("{},{}\n", f[1], f[0])
        })
        .collect();
    fs::write(dir.join("swapped.csv"), swapped).unwrap();
    assert_eq!(ok(dir, "predict --model t.json --data swapped.csv"), direct);

    fs::write(dir.join("header.csv"), "x1,x2\n").unwrap();
    assert_eq!(
        ok(dir, "predict --model t.json --data header.csv"),
        "prediction\n"
    );

    fs::write(dir.join("short.csv"), "x1\n0.5\n").unwrap();
    let (code, err) = fails(dir, "predict --model t.json --data short.csv");
    assert_eq!(code, 1);
    assert!(err.contains("missing column 'x2'"), "{err}");
    assert_eq!(err.lines().count(), 1);
}

#[test]
fn evaluate_scores_the_saved_model() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    steps(dir);
    ok(
        dir,
        "train --data steps.csv --target y --model ols --out o.json",
    );
    let table = ok(dir, "evaluate --model o.json --data steps.csv --csv e.csv");
    assert!(table.contains("ols"));
    let csv = read(dir, "e.csv");
    assert!(csv.starts_with("model,mae,rmse,mape,r2,adj_r2\n"), "{csv}");
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    fs::write(
        dir.join("a.cfg"),
        "generator=linear\nn=50\nseed=1\nout=a.csv\n",
    )
    .unwrap();
    ok(dir, "synth --config a.cfg");
    ok(dir, "synth --config a.cfg --n 20 --out b.csv");
    let rows = |f: &str| read(dir, f).lines().count() - 1;
    assert_eq!((rows("a.csv"), rows("b.csv")), (50, 20));

    fs::write(dir.join("bad.cfg"), "n 20\n").unwrap();
    let (code, _) = fails(dir, "synth --config bad.cfg");
    assert_eq!(code, 2);
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    steps(dir);
    let (code, err) = fails(
        dir,
        "train --data steps.csv --target y --model forest --out f.json",
    );
    assert_eq!(code, 2);
    assert!(err.contains("forest"));
    let (code, err) = fails(
        dir,
        "sweep --kind tree --generator axis-steps --sizes 800,200",
    );
    assert_eq!(code, 2);
    assert!(err.contains("ascending"));
}

#[test]
fn runtime_errors_are_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    steps(dir);
    for args in [
        "train --data missing.csv --target y --model tree --out t.json",
        "train --data steps.csv --target nope --model tree --out t.json",
        "predict --model missing.json --data steps.csv",
    ] {
        let (code, err) = fails(dir, args);
        assert_eq!(code, 1, "{args}");
        assert!(
            err.starts_with("error: ") && err.lines().count() == 1,
            "{err}"
        );
    }
}

#[test]
fn sweep_and_benchmark_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    let out = ok(
        dir,
        "sweep --kind tree --generator axis-steps --sizes 100,400 --repeats 2 --out s.csv",
    );
    assert!(out.contains("verdict: "), "{out}");
    let csv = read(dir, "s.csv");
    assert!(csv.starts_with("n,repeat,capacity,train_risk,holdout_risk\n"));
    assert_eq!(csv.lines().count(), 5);

    steps(dir);
    let out = ok(dir, "benchmark --data steps.csv --target y --out-dir bench");
    assert!(out.contains("MARS"));
    for f in ["bench/in_sample.csv", "bench/holdout.csv"] {
        let csv = read(dir, f);
        assert_eq!(csv.lines().count(), 7, "{csv}");
    }
}
