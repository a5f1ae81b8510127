use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn cfs(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cfs")).args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn two_point_measure() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/two_point_measure.json")
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn gen_is_byte_identical_per_seed() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let out = cfs(dir.path(), &["gen", "--count", "4", "--seed", "11"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("operators.json")).unwrap();
    assert_eq!(read(&a), read(&b));
    let ops = read_json(a.path().join("operators.json"));
    assert_eq!(ops.as_array().unwrap().len(), 4);
}

#[test]
fn gen_count_zero_writes_empty_list() {
    let dir = tempfile::tempdir().unwrap();
    assert!(cfs(dir.path(), &["gen", "--count", "0"]).status.success());
    assert_eq!(read_json(dir.path().join("operators.json")), Value::Array(vec![]));
}

#[test]
fn generated_operators_load_as_regular() {
    let dir = tempfile::tempdir().unwrap();
    assert!(cfs(dir.path(), &["gen", "--count", "5", "--dim", "5", "--spin", "2"]).status.success());
    let text = std::fs::read_to_string(dir.path().join("operators.json")).unwrap();
    let docs: Vec<cfs_core::io::OperatorJson> = cfs_core::io::parse_json(&text).unwrap();
    for doc in docs {
        let x = doc.to_operator::<f64>(cfs_core::Tolerances::default()).unwrap();
        assert!(x.is_regular());
    }
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cfs(dir.path(), &["verify", "nonsense"]).status.code(), Some(2));
}

#[test]
fn invalid_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cfs(dir.path(), &["gen", "--dim", "3", "--spin", "2"]).status.code(), Some(2));
}

#[test]
fn missing_and_malformed_inputs_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.json");
    assert_eq!(
        cfs(dir.path(), &["action", "--measure", missing.to_str().unwrap(), "--s-constant", "1"]).status.code(),
        Some(3)
    );
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(cfs(dir.path(), &["pairs", "--operators", bad.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn verify_charts_on_default_config_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = cfs(dir.path(), &["verify", "charts"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report = read_json(dir.path().join("verify_charts.json"));
    assert_eq!(report["passed"], Value::Bool(true));
    assert_eq!(report["d"], 6);
}

#[test]
fn verify_hoelder_reports_one_third_for_spin_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = cfs(dir.path(), &["verify", "hoelder", "--spin", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report = read_json(dir.path().join("verify_hoelder.json"));
    let fit = report["fits"].as_array().unwrap().iter().find(|f| f["name"] == "degenerate_lagrangian").unwrap();
    let exponent = fit["fit"]["exponent_hat"].as_f64().unwrap();
    assert!((exponent - 1.0 / 3.0).abs() < 0.05, "{exponent}");
    assert!(dir.path().join("scan.csv").exists());
}

#[test]
fn action_on_two_point_measure_matches_hand_sum() {
    let dir = tempfile::tempdir().unwrap();
    let measure = two_point_measure();
    let out = cfs(dir.path(), &["action", "--measure", measure.to_str().unwrap(), "--s-constant", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = read_json(dir.path().join("action.json"));
    // x1 = diag(2,-1), x2 = diag(1,-3): L(x1,x1) = 4.5, L(x1,x2) = 0.5,
    // L(x2,x2) = 32; weights 1 and 2.
    let expected = 1.0 * 4.5 + 2.0 * (1.0 * 2.0 * 0.5) + 4.0 * 32.0;
    assert!((doc["action"].as_f64().unwrap() - expected).abs() < 1e-12);
    assert_eq!(doc["volume"].as_f64().unwrap(), 3.0);
    let ell: Vec<f64> = doc["ell_values"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!((ell[0] - (4.5 + 2.0 * 0.5 - 1.0)).abs() < 1e-12);
    assert!((ell[1] - (0.5 + 2.0 * 32.0 - 1.0)).abs() < 1e-12);
}

#[test]
fn minimize_with_zero_budget_returns_input() {
    let dir = tempfile::tempdir().unwrap();
    let measure = two_point_measure();
    let out = cfs(dir.path(), &["minimize", "--measure", measure.to_str().unwrap(), "--budget", "0"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_json(dir.path().join("minimized.json")), read_json(measure));
    let log = std::fs::read_to_string(dir.path().join("minimizer.csv")).unwrap();
    assert_eq!(log.lines().count(), 2, "header plus the starting state");
}

#[test]
fn minimize_logs_descent_deterministically() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let measure = two_point_measure();
    for dir in [&a, &b] {
        assert!(cfs(
            dir.path(),
            &["minimize", "--measure", measure.to_str().unwrap(), "--budget", "50", "--seed", "3"]
        )
        .status
        .success());
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("minimizer.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    let mut rdr = csv::Reader::from_path(a.path().join("minimizer.csv")).unwrap();
    let actions: Vec<f64> = rdr.deserialize::<cfs_core::io::IterationRow>().map(|r| r.unwrap().action).collect();
    assert!(actions.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn narrow_scan_warns_and_is_low_confidence() {
    let dir = tempfile::tempdir().unwrap();
    let out = cfs(dir.path(), &["scan", "--steps", "1e-3,7e-4,5e-4,3e-4,2e-4"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let fit = read_json(dir.path().join("fit.json"));
    assert_eq!(fit["low_confidence"], Value::Bool(true));
}

#[test]
fn default_scan_recovers_degenerate_exponent() {
    let dir = tempfile::tempdir().unwrap();
    assert!(cfs(dir.path(), &["scan", "--spin", "2"]).status.success());
    let fit = read_json(dir.path().join("fit.json"));
    assert!((fit["exponent_hat"].as_f64().unwrap() - 1.0 / 3.0).abs() < 0.05);
    assert_eq!(fit["low_confidence"], Value::Bool(false));
    let rows = std::fs::read_to_string(dir.path().join("scan.csv")).unwrap();
    assert!(rows.starts_with("t,delta,ratio"));
}

#[test]
fn pairs_table_is_symmetric() {
    let dir = tempfile::tempdir().unwrap();
    assert!(cfs(dir.path(), &["gen", "--count", "3"]).status.success());
    let ops = dir.path().join("operators.json");
    assert!(cfs(dir.path(), &["pairs", "--operators", ops.to_str().unwrap()]).status.success());
    let mut rdr = csv::Reader::from_path(dir.path().join("pairs.csv")).unwrap();
    let rows: Vec<cfs_core::io::PairRow> = rdr.deserialize().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 9);
    for r in &rows {
        let t = rows.iter().find(|s| s.i == r.j && s.j == r.i).unwrap();
        assert!((r.lagrangian - t.lagrangian).abs() <= 1e-10 * (1.0 + r.spectral_weight));
    }
}
