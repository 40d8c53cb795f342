//! End-to-end checks of the `fstglm` binary: output formats, determinism,
//! and the exit-code contract (2 usage, 3 bad input file, 4 numerical).

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicU64, Ordering};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fstglm"))
}

static DIR_SEQ: AtomicU64 = AtomicU64::new(0);

/// Fresh scratch directory per test, unique across parallel test threads.
fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "fstglm-cli-{tag}-{}-{}",
        std::process::id(),
        DIR_SEQ.fetch_add(1, Ordering::Relaxed)
    ));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn corpus_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../assets/mini_corpus.tsv")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn assert_code(out: &Output, want: i32) {
    assert_eq!(
        out.status.code(),
        Some(want),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn simulate(dir: &Path, example: &str, seed: &str, name: &str) -> PathBuf {
    let out = dir.join(name);
    let res = run(&[
        "simulate",
        "--example",
        example,
        "--seed",
        seed,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_code(&res, 0);
    out
}

#[test]
fn simulate_is_deterministic_and_validates_example() {
    let dir = scratch("sim");
    let a = simulate(&dir, "1", "42", "a.csv");
    let b = simulate(&dir, "1", "42", "b.csv");
    let text = read(&a);
    assert_eq!(text, read(&b));
    assert_eq!(text.lines().count(), 101);
    assert!(text.starts_with("y,x1,x2,"));

    let bad = run(&["simulate", "--example", "3", "--seed", "0", "--out", "x.csv"]);
    assert_code(&bad, 2);
}

#[test]
fn fit_rejects_gamma_zero_as_usage_error() {
    let dir = scratch("gamma0");
    let data = simulate(&dir, "1", "0", "d.csv");
    let out = run(&[
        "fit",
        "--data",
        data.to_str().unwrap(),
        "--nu",
        "8",
        "--gamma",
        "0",
        "--out",
        dir.join("m.json").to_str().unwrap(),
    ]);
    assert_code(&out, 2);
}

#[test]
fn delta_one_and_omitted_delta_write_identical_models() {
    let dir = scratch("delta1");
    let data = simulate(&dir, "2", "9", "d.csv");
    let m_sym = dir.join("sym.json");
    let m_one = dir.join("one.json");
    let base = [
        "fit",
        "--data",
        data.to_str().unwrap(),
        "--nu",
        "8",
        "--gamma",
        "1",
    ];
    let mut sym = base.to_vec();
    sym.extend(["--out", m_sym.to_str().unwrap()]);
    assert_code(&run(&sym), 0);
    let mut one = base.to_vec();
    one.extend(["--delta", "1", "--out", m_one.to_str().unwrap()]);
    assert_code(&run(&one), 0);
    assert_eq!(read(&m_sym), read(&m_one));
}

#[test]
fn all_zero_model_predicts_label_zero_everywhere() {
    let dir = scratch("zero");
    let data = simulate(&dir, "1", "5", "d.csv");
    let model = dir.join("m.json");
    let out = run(&[
        "fit",
        "--data",
        data.to_str().unwrap(),
        "--nu",
        "30",
        "--gamma",
        "1000000",
        "--out",
        model.to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    let preds = dir.join("p.csv");
    assert_code(
        &run(&[
            "predict",
            "--model",
            model.to_str().unwrap(),
            "--data",
            data.to_str().unwrap(),
            "--out",
            preds.to_str().unwrap(),
        ]),
        0,
    );
    let text = read(&preds);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("prob,label"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 100);
    // Probability sits exactly on the 0.5 threshold; ties go to label 0.
    assert!(rows.iter().all(|r| *r == "0.5,0"));
}

#[test]
fn fit_writes_trace_with_initial_objective_row() {
    let dir = scratch("trace");
    let data = simulate(&dir, "2", "3", "d.csv");
    let trace = dir.join("t.csv");
    let out = run(&[
        "fit",
        "--data",
        data.to_str().unwrap(),
        "--nu",
        "8",
        "--gamma",
        "1",
        "--out",
        dir.join("m.json").to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    let text = read(&trace);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("iteration,objective,rel_change"));
    let first = lines.next().unwrap();
    assert!(first.starts_with("0,"));
    assert!(first.ends_with(','), "row 0 has no rel_change: {first}");
    assert!(lines.next().unwrap().starts_with("1,"));
}

#[test]
fn bad_input_files_exit_3() {
    let dir = scratch("badfiles");
    let missing = run(&[
        "fit",
        "--data",
        dir.join("nope.csv").to_str().unwrap(),
        "--nu",
        "8",
        "--gamma",
        "1",
        "--out",
        dir.join("m.json").to_str().unwrap(),
    ]);
    assert_code(&missing, 3);

    // Truncated model JSON.
    let data = simulate(&dir, "1", "1", "d.csv");
    let broken = dir.join("broken.json");
    std::fs::write(&broken, "{\"schema_version\": 1, \"nu\": 8.0").unwrap();
    let out = run(&[
        "predict",
        "--model",
        broken.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--out",
        dir.join("p.csv").to_str().unwrap(),
    ]);
    assert_code(&out, 3);

    // Unlabeled CSV (wrong header).
    let badcsv = dir.join("bad.csv");
    std::fs::write(&badcsv, "x1,x2\n1,0\n").unwrap();
    let out = run(&[
        "fit",
        "--data",
        badcsv.to_str().unwrap(),
        "--nu",
        "8",
        "--gamma",
        "1",
        "--out",
        dir.join("m.json").to_str().unwrap(),
    ]);
    assert_code(&out, 3);
}

#[test]
fn predict_names_first_mismatched_feature() {
    let dir = scratch("mismatch");
    let data = simulate(&dir, "1", "7", "d.csv");
    let model = dir.join("m.json");
    assert_code(
        &run(&[
            "fit",
            "--data",
            data.to_str().unwrap(),
            "--nu",
            "8",
            "--gamma",
            "1",
            "--out",
            model.to_str().unwrap(),
        ]),
        0,
    );
    let renamed = dir.join("renamed.csv");
    std::fs::write(&renamed, read(&data).replacen("x3", "z3", 1)).unwrap();
    let out = run(&[
        "predict",
        "--model",
        model.to_str().unwrap(),
        "--data",
        renamed.to_str().unwrap(),
        "--out",
        dir.join("p.csv").to_str().unwrap(),
    ]);
    assert_code(&out, 3);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("x3") && err.contains("z3"), "stderr: {err}");
}

#[test]
fn degenerate_labels_exit_4() {
    let dir = scratch("degenerate");
    let allzero = dir.join("z.csv");
    std::fs::write(&allzero, "y,x1\n0,1\n0,0\n0,1\n0,0\n").unwrap();
    let out = run(&[
        "fit",
        "--data",
        allzero.to_str().unwrap(),
        "--nu",
        "8",
        "--gamma",
        "1",
        "--out",
        dir.join("m.json").to_str().unwrap(),
    ]);
    assert_code(&out, 4);
}

#[test]
fn evaluate_reports_metrics_csv() {
    let dir = scratch("eval");
    let data = simulate(&dir, "2", "11", "d.csv");
    let model = dir.join("m.json");
    assert_code(
        &run(&[
            "fit",
            "--data",
            data.to_str().unwrap(),
            "--nu",
            "8",
            "--gamma",
            "0.1",
            "--out",
            model.to_str().unwrap(),
        ]),
        0,
    );
    let report = dir.join("r.csv");
    assert_code(
        &run(&[
            "evaluate",
            "--model",
            model.to_str().unwrap(),
            "--data",
            data.to_str().unwrap(),
            "--out",
            report.to_str().unwrap(),
        ]),
        0,
    );
    let text = read(&report);
    assert!(text.starts_with("misclassification,precision,recall,f1\n"));
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn grid_tabular_writes_ordered_table_and_report() {
    let dir = scratch("gridtab");
    let train = simulate(&dir, "2", "1", "train.csv");
    let val = simulate(&dir, "2", "2", "val.csv");
    let test = simulate(&dir, "2", "3", "test.csv");
    let table = dir.join("table.csv");
    let report = dir.join("report.csv");
    let out = run(&[
        "grid",
        "--train",
        train.to_str().unwrap(),
        "--val",
        val.to_str().unwrap(),
        "--test",
        test.to_str().unwrap(),
        "--nu-grid",
        "8,30",
        "--gamma-grid",
        "0.1,1",
        "--delta-grid",
        "1",
        "--objective",
        "misclassification",
        "--out-table",
        table.to_str().unwrap(),
        "--out-report",
        report.to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    let table = read(&table);
    // Header plus 2 nu x 1 delta x 2 gamma rows, ordered by (nu, delta, gamma).
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "nu,gamma,delta,objective_value,converged");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("8,0.1,1,"));
    assert!(lines[4].starts_with("30,1,1,"));
    assert!(read(&report).starts_with("misclassification,"));
    let summary = String::from_utf8_lossy(&out.stdout);
    assert!(summary.starts_with("selected nu="), "stdout: {summary}");
}

#[test]
fn grid_mode_flags_are_validated() {
    let dir = scratch("gridmode");
    let data = simulate(&dir, "2", "1", "d.csv");
    let common = ["--out-table", "t.csv", "--out-report", "r.csv"];

    // Neither mode selected.
    let mut args = vec!["grid"];
    args.extend(common);
    assert_code(&run(&args), 2);

    // Both modes selected.
    let corpus = corpus_path();
    let mut args = vec![
        "grid",
        "--train",
        data.to_str().unwrap(),
        "--corpus",
        corpus.to_str().unwrap(),
    ];
    args.extend(common);
    assert_code(&run(&args), 2);

    // Tabular without --val/--test.
    let mut args = vec!["grid", "--train", data.to_str().unwrap()];
    args.extend(common);
    assert_code(&run(&args), 2);

    // Malformed grid list.
    let mut args = vec![
        "grid",
        "--corpus",
        corpus.to_str().unwrap(),
        "--nu-grid",
        "1,,2",
    ];
    args.extend(common);
    assert_code(&run(&args), 2);
}

#[test]
fn grid_corpus_reports_per_split_rows() {
    let dir = scratch("gridcorpus");
    let table = dir.join("table.csv");
    let report = dir.join("report.csv");
    let corpus = corpus_path();
    let out = run(&[
        "grid",
        "--corpus",
        corpus.to_str().unwrap(),
        "--splits",
        "2",
        "--nu-grid",
        "8",
        "--gamma-grid",
        "0.05",
        "--delta-grid",
        "1",
        "--seed",
        "0",
        "--out-table",
        table.to_str().unwrap(),
        "--out-report",
        report.to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    let report = read(&report);
    let lines: Vec<&str> = report.lines().collect();
    // Header, one row per split, then mean and sd.
    assert_eq!(lines.len(), 5);
    assert!(lines[0].starts_with("split,micro_precision"));
    assert!(lines[3].starts_with("mean,"));
    assert!(lines[4].starts_with("sd,"));
    let table = read(&table);
    // 2 splits x 4 categories.
    assert_eq!(table.lines().count(), 9);
    assert!(table.starts_with("split,category,nu,delta,gamma,"));
}

#[test]
fn curve_outputs_have_documented_shapes() {
    let dir = scratch("curve");
    let link = dir.join("link.csv");
    assert_code(
        &run(&["curve", "--kind", "link", "--nu", "3", "--delta", "2", "--out", link.to_str().unwrap()]),
        0,
    );
    let text = read(&link);
    assert_eq!(text.lines().count(), 1602);
    let probs: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(probs.windows(2).all(|w| w[1] >= w[0]), "link curve not monotone");

    let qq = dir.join("qq.csv");
    assert_code(&run(&["curve", "--kind", "qq", "--nu", "8", "--out", qq.to_str().unwrap()]), 0);
    assert_eq!(read(&qq).lines().count(), 2000);

    let hp = dir.join("hp.csv");
    assert_code(
        &run(&["curve", "--kind", "hyperprior", "--gamma", "2", "--out", hp.to_str().unwrap()]),
        0,
    );
    let text = read(&hp);
    assert_eq!(text.lines().count(), 501);
    // f(tau) = (gamma/2) exp(-gamma tau / 2) at tau = 0.01.
    let first: f64 = text.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((first - (-0.01f64).exp()).abs() < 1e-15);

    let sp = dir.join("sp.csv");
    assert_code(
        &run(&["curve", "--kind", "skewpdf", "--nu", "5", "--delta", "0.5", "--out", sp.to_str().unwrap()]),
        0,
    );
    assert_eq!(read(&sp).lines().count(), 1602);
}
