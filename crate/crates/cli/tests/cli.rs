use std::process::{Command, Output};

use fano_core::bounds::{BoundReport, ContinuousFanoReport, CSV_COLUMNS};
use fano_core::markov_sim::Certification;
use fano_core::relations::VolumeEstimate;
use fano_core::verifier::SweepSummary;

const P: &str = r#"{"outcomes": ["a", "b"], "weights": [0.9, 0.1]}"#;
const Q: &str = r#"{"outcomes": ["a", "b"], "weights": [0.2, 0.8]}"#;
const EXPERIMENT: &str = r#"{
    "prior": {"outcomes": ["0", "1"], "weights": [0.5, 0.5]},
    "channel": {"inputs": ["0", "1"], "outputs": ["0", "1"], "rows": [[0.9, 0.1], [0.2, 0.8]]},
    "n": 3
}"#;
const DOMAIN: &str = r#"{"lower": [0.0], "upper": [1.0], "metric": "l1", "t": 0.01}"#;

fn fano(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fano"))
        .args(args)
        .output()
        .expect("fano runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

#[test]
fn help_exits_zero() {
    let out = fano(&["bound", "--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("Usage: fano bound"));
    let top = fano(&["--help"]);
    assert!(stdout(&top).contains("Exit status"));
}

#[test]
fn divergence_of_order_two() {
    // ln(0.9^2 / 0.2 + 0.1^2 / 0.8) = ln 4.0625
    let out = fano(&["divergence", "--alpha", "2", P, Q, "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((v["divergence"].as_f64().unwrap() - 1.4017985476558559).abs() < 1e-14);

    let bits = fano(&["divergence", "--alpha", "2", "--base", "2", P, Q, "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&bits)).unwrap();
    assert!((v["divergence"].as_f64().unwrap() - 4.0625f64.log2()).abs() < 1e-14);
}

#[test]
fn divergence_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.json");
    let q = dir.path().join("q.json");
    std::fs::write(&p, P).unwrap();
    std::fs::write(&q, Q).unwrap();
    let out = fano(&["divergence", p.to_str().unwrap(), q.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("divergence"));
}

#[test]
fn bound_report_round_trips() {
    let out = fano(&[
        "bound",
        "--divergence",
        "0.5",
        "--alpha",
        "2",
        "--pmin",
        "0.25",
        "--pmax",
        "0.25",
        "--p",
        "0.5",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let r: BoundReport = serde_json::from_str(&text).unwrap();
    assert!(r.holds());
    assert_eq!(serde_json::to_string_pretty(&r).unwrap() + "\n", text);
}

#[test]
fn bound_inputs_from_json_with_flag_override() {
    let inputs = r#"{"divergence": 0.5, "alpha": "kl", "p_min": 0.25, "p_max": 0.25}"#;
    let out = fano(&["solve", inputs, "--pmax", "0.3", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[1], "solve");
    assert_eq!(row[4], "0.3");
}

#[test]
fn violated_bound_exits_one() {
    // equal distributions, event of mass 1/8, order 1/4
    let out = fano(&[
        "bound",
        "--divergence",
        "0",
        "--alpha",
        "0.25",
        "--pmin",
        "0.125",
        "--pmax",
        "0.125",
        "--p",
        "0.125",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn input_errors_exit_two_with_one_line() {
    let missing = fano(&["bound", "--divergence", "0.5", "--pmin", "0.25", "--p", "0.5"]);
    assert_eq!(missing.status.code(), Some(2));
    let err = stderr(&missing);
    assert_eq!(err.lines().count(), 1);
    assert!(err.contains("--pmax"));

    let bad_field = fano(&["divergence", r#"{"outcomes": ["a"], "weight": [1]}"#, Q]);
    assert_eq!(bad_field.status.code(), Some(2));
    assert!(stderr(&bad_field).contains("weight"));

    let bad_flag = fano(&["sweep", "--denominator", "eight"]);
    assert_eq!(bad_flag.status.code(), Some(2));

    let hypotheses = fano(&["solve", "--divergence", "1", "--pmin", "0.5", "--pmax", "0.6"]);
    assert_eq!(hypotheses.status.code(), Some(2));
    assert!(stderr(&hypotheses).contains("p_min"));
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_fano"))
        .args(["divergence", P, Q])
        .env("FANO_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("FANO_THREADS"));
}

#[test]
fn sweep_of_valid_orders_passes() {
    let out = fano(&[
        "sweep",
        "--denominator",
        "8",
        "--k",
        "2,3",
        "--alpha",
        "2,4",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let s: SweepSummary = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(s.instances >= 10_000);
    assert_eq!(s.violations, 0);
    assert!(s.elapsed_ms.is_none());
}

#[test]
fn sweep_below_order_one_reports_violations() {
    let out = fano(&[
        "sweep",
        "--denominator",
        "8",
        "--k",
        "2,3",
        "--random-pairs",
        "0",
        "--timing",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let s: SweepSummary = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(s.violations > 0 && s.elapsed_ms.is_some());
    assert!(s
        .by_order
        .iter()
        .filter(|o| o.violations > 0)
        .all(|o| o.alpha == "0.25" || o.alpha == "0.5"));
}

#[test]
fn sweep_csv_lists_every_instance() {
    let out = fano(&[
        "sweep",
        "--denominator",
        "4",
        "--k",
        "2",
        "--alpha",
        "2",
        "--random-pairs",
        "0",
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), CSV_COLUMNS);
    assert!(reader.records().count() > 0);
}

#[test]
fn certify_round_trips_and_holds() {
    let out = fano(&["certify", EXPERIMENT, "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let c: Certification = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(c.all_hold());
    assert!(c.summary.exact);
    // 0.5 * (0.9^3 + 3 * 0.9^2 * 0.1) + 0.5 * (0.8^3 + 3 * 0.8^2 * 0.2)
    assert!((c.summary.p_r - 0.934).abs() < 1e-12);
}

#[test]
fn certify_table_lists_reports() {
    let out = fano(&["certify", EXPERIMENT, "--n", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("relation-reconstruction") && text.contains("samples-beta"));
}

#[test]
fn volume_and_continuous_bound() {
    let out = fano(&["volume", DOMAIN, "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: VolumeEstimate = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((v.value - 0.02).abs() < 1e-15);

    let out = fano(&[
        "solve",
        "--kind",
        "continuous",
        "--divergence",
        "1.0",
        "--domain",
        DOMAIN,
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r: ContinuousFanoReport = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(r.report.feasible_sup.unwrap() < 1.0);
}

#[test]
fn mi_distance_solve() {
    // I = 0, M = 4, N = 2: success s is feasible while s ln 2 <= h(s)
    let out = fano(&[
        "solve",
        "--kind",
        "mi-distance",
        "--divergence",
        "0",
        "--m",
        "4",
        "--n-max",
        "2",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r: BoundReport = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((r.feasible_sup.unwrap() - 0.7729078047806518).abs() < 1e-9);
}

#[test]
fn out_writes_the_file_and_nothing_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = fano(&[
        "certify",
        EXPERIMENT,
        "--format",
        "json",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    let direct = fano(&["certify", EXPERIMENT, "--format", "json"]);
    assert_eq!(written, stdout(&direct));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}
