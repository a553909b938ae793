//! End-to-end tests of the binary: file outputs, exit codes, determinism,
//! and agreement between the printed summary and the machine exports.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use lofstream_core::{import_grid_csv, Algo};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lofstream"));
    cmd.env_remove("LOFSTREAM_OUT_DIR");
    cmd
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "expected success for {args:?}\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn exit_code(args: &[&str]) -> i32 {
    bin()
        .args(args)
        .output()
        .expect("binary runs")
        .status
        .code()
        .expect("exit code")
}

fn simulate_small(dir: &Path) {
    run_ok(&[
        "simulate",
        "--dim",
        "2",
        "--n-initial",
        "60",
        "--n-stream",
        "30",
        "--fraction",
        "0.1",
        "--seed",
        "11",
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
}

#[test]
fn simulate_writes_labeled_pair_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        run_ok(&[
            "simulate",
            "--seed",
            "7",
            "--n-initial",
            "100",
            "--n-stream",
            "50",
            "--out-dir",
            dir.to_str().unwrap(),
        ]);
    }
    let read = |d: &Path, f: &str| fs::read(d.join(f)).unwrap();
    assert_eq!(read(&a, "initial.csv"), read(&b, "initial.csv"));
    assert_eq!(read(&a, "stream.csv"), read(&b, "stream.csv"));

    let text = fs::read_to_string(a.join("initial.csv")).unwrap();
    assert!(text.starts_with("f0,f1,label\n"));
    assert_eq!(text.lines().count(), 101);
}

#[test]
fn simulate_default_counts_match_protocol() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_ok(&["simulate", "--out-dir", tmp.path().to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("initial: 1000 points"));
    assert!(stdout.contains("stream:  1280 points"));
    // 5% of 2280 points are labeled outliers.
    let count_outliers = |file: &str| -> usize {
        fs::read_to_string(tmp.path().join(file))
            .unwrap()
            .lines()
            .skip(1)
            .filter(|l| l.ends_with(",1"))
            .count()
    };
    assert_eq!(
        count_outliers("initial.csv") + count_outliers("stream.csv"),
        114
    );
}

#[test]
fn simulate_rejects_bad_fraction_with_exit_2() {
    assert_eq!(exit_code(&["simulate", "--fraction", "1.5"]), 2);
    assert_eq!(exit_code(&["simulate", "--fraction", "0"]), 2);
}

#[test]
fn unknown_flags_exit_2() {
    assert_eq!(exit_code(&["run", "--frobnicate"]), 2);
    assert_eq!(exit_code(&["nonsense"]), 2);
}

#[test]
fn run_both_engines_and_exports_agree_with_summary() {
    let tmp = tempfile::tempdir().unwrap();
    simulate_small(tmp.path());
    let results = tmp.path().join("results");
    let out = run_ok(&[
        "run",
        "--initial",
        tmp.path().join("initial.csv").to_str().unwrap(),
        "--stream",
        tmp.path().join("stream.csv").to_str().unwrap(),
        "--algo",
        "both",
        "--k",
        "5",
        "--thresholds",
        "0.1",
        "--m-checkpoints",
        "0,10,30",
        "--out",
        results.to_str().unwrap(),
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("stream hash:"));
    assert!(stdout.contains("| ILOF |"));
    assert!(stdout.contains("| EILOF |"));

    // The printed summary is the markdown export, byte for byte.
    let md = fs::read_to_string(results.join("grid.md")).unwrap();
    assert!(stdout.contains(&md));

    let grid = import_grid_csv(&fs::read_to_string(results.join("grid.csv")).unwrap()).unwrap();
    assert_eq!(grid.cells.len(), 2 * 3);
    // Every F1 value in the summary table appears in the machine export.
    for cell in &grid.cells {
        assert!(
            md.contains(&format!("{:.4}", cell.report.f1)),
            "summary lacks F1 {:.4}",
            cell.report.f1
        );
    }
    assert!(fs::metadata(results.join("grid.json")).is_ok());
}

#[test]
fn run_is_reproducible_across_invocations() {
    let tmp = tempfile::tempdir().unwrap();
    simulate_small(tmp.path());
    let load =
        |dir: &Path| import_grid_csv(&fs::read_to_string(dir.join("grid.csv")).unwrap()).unwrap();
    let args = |dir: &Path| {
        vec![
            "run".to_string(),
            "--initial".into(),
            tmp.path().join("initial.csv").display().to_string(),
            "--stream".into(),
            tmp.path().join("stream.csv").display().to_string(),
            "--k".into(),
            "4".into(),
            "--thresholds".into(),
            "0.1".into(),
            "--m-checkpoints".into(),
            "5,30".into(),
            "--out".into(),
            dir.display().to_string(),
        ]
    };
    let d1 = tmp.path().join("r1");
    let d2 = tmp.path().join("r2");
    for d in [&d1, &d2] {
        let a = args(d);
        run_ok(&a.iter().map(String::as_str).collect::<Vec<_>>());
    }
    assert!(load(&d1).results_equal(&load(&d2)));
}

#[test]
fn run_via_plan_file() {
    let tmp = tempfile::tempdir().unwrap();
    let plan = tmp.path().join("plan.toml");
    fs::write(
        &plan,
        r#"
source = "synth"
k_values = [5]
m_schedule = [10, 20]
thresholds = [0.1]
algos = ["eilof"]
seed = 5
n_initial = 50
n_stream = 20
outlier_fraction = 0.1
"#,
    )
    .unwrap();
    let results = tmp.path().join("out");
    let out = run_ok(&[
        "run",
        "--plan",
        plan.to_str().unwrap(),
        "--out",
        results.to_str().unwrap(),
    ]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("| EILOF | 5 |"));
    let grid = import_grid_csv(&fs::read_to_string(results.join("grid.csv")).unwrap()).unwrap();
    assert!(grid.cells.iter().all(|c| c.algo == Algo::Eilof));
}

#[test]
fn run_missing_stream_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    simulate_small(tmp.path());
    let code = exit_code(&[
        "run",
        "--initial",
        tmp.path().join("initial.csv").to_str().unwrap(),
        "--stream",
        tmp.path().join("missing.csv").to_str().unwrap(),
        "--k",
        "5",
    ]);
    assert_eq!(code, 2);
}

#[test]
fn run_oversized_k_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    simulate_small(tmp.path());
    let code = exit_code(&[
        "run",
        "--initial",
        tmp.path().join("initial.csv").to_str().unwrap(),
        "--stream",
        tmp.path().join("stream.csv").to_str().unwrap(),
        "--k",
        "60",
        "--m-checkpoints",
        "5",
    ]);
    assert_eq!(code, 2);
}

#[test]
fn unwritable_output_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("blocker");
    fs::write(&blocker, "a file, not a directory").unwrap();
    let code = exit_code(&[
        "simulate",
        "--n-initial",
        "20",
        "--n-stream",
        "10",
        "--out-dir",
        blocker.join("sub").to_str().unwrap(),
    ]);
    assert_eq!(code, 3);
}

#[test]
fn bench_reports_dominance_and_writes_series() {
    let tmp = tempfile::tempdir().unwrap();
    simulate_small(tmp.path());
    let out_dir = tmp.path().join("bench");
    let out = run_ok(&[
        "bench",
        "--initial",
        tmp.path().join("initial.csv").to_str().unwrap(),
        "--stream",
        tmp.path().join("stream.csv").to_str().unwrap(),
        "--k",
        "5",
        "--m",
        "30",
        "--repetitions",
        "2",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("per-insertion dominance: holds"));
    let series = fs::read_to_string(out_dir.join("bench_series.csv")).unwrap();
    // header + 30 insertions for each engine
    assert_eq!(series.lines().count(), 1 + 60);
    assert!(fs::metadata(out_dir.join("bench.json")).is_ok());
}

#[test]
fn score_flags_far_point_and_appends_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("square.csv");
    fs::write(&input, "f0,f1\n0,0\n1,0\n0,1\n1,1\n10,10\n").unwrap();
    let scored = tmp.path().join("scored.csv");
    run_ok(&[
        "score",
        "--input",
        input.to_str().unwrap(),
        "--k",
        "2",
        "--contamination",
        "0.2",
        "--out",
        scored.to_str().unwrap(),
    ]);
    let text = fs::read_to_string(&scored).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "f0,f1,lof,flag");
    // Only the far point is flagged; the square corners score exactly 1.
    assert!(lines[1].ends_with(",0") && lines[1].contains("1.0000000000000000e0"));
    assert!(lines[5].ends_with(",1"));
    let repeat = bin()
        .args([
            "score",
            "--input",
            input.to_str().unwrap(),
            "--k",
            "2",
            "--contamination",
            "0.2",
            "--out",
            scored.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(repeat.status.success());
    assert_eq!(fs::read_to_string(&scored).unwrap(), text);
}

#[test]
fn score_rejects_oversized_k_and_zero_contamination() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("tiny.csv");
    fs::write(&input, "f0,f1\n0,0\n1,0\n0,1\n").unwrap();
    assert_eq!(
        exit_code(&["score", "--input", input.to_str().unwrap(), "--k", "5"]),
        2
    );
    assert_eq!(
        exit_code(&[
            "score",
            "--input",
            input.to_str().unwrap(),
            "--k",
            "2",
            "--contamination",
            "0",
        ]),
        2
    );
}

#[test]
fn out_dir_env_is_honored() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("from_env");
    let status = bin()
        .env("LOFSTREAM_OUT_DIR", &out)
        .args([
            "simulate",
            "--n-initial",
            "20",
            "--n-stream",
            "10",
            "--fraction",
            "0.1",
        ])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("initial.csv").exists());
    assert!(out.join("stream.csv").exists());
}
