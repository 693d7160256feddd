use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn lorenz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lorenz")).args(args).output().unwrap()
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../lorenz/tests/data/fixed_point_theta_01_10.json")
}

fn standard(dir: &Path, name: &str, u: &str, v: &str) -> PathBuf {
    let p = dir.join(name);
    let out = lorenz(&["standard", "--u", u, "--v", v, "--out", p.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    p
}

#[test]
fn analyze_reports_a_nontrivial_renormalizable_map() {
    let dir = tempfile::tempdir().unwrap();
    let p = standard(dir.path(), "f.json", "0.8125", "0.1875");
    let out = lorenz(&["analyze", "--input", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["nontriviality"], "Nontrivial");
    assert_eq!(report["renormalizable"], true);
    assert_eq!(report["theta"]["theta_plus"], serde_json::json!([1, 0]));
    assert_eq!(report["config"]["max_time"], 8);
}

#[test]
fn trivial_maps_exit_with_the_classification_code() {
    let dir = tempfile::tempdir().unwrap();
    let p = standard(dir.path(), "t.json", "0.45", "0.3");
    let out = lorenz(&["analyze", "--input", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["nontriviality"], "Trivial");
}

#[test]
fn malformed_input_exits_with_the_input_code() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, "{\n  \"alpha\": 2.0,\n  \"c\": ,\n}").unwrap();
    let out = lorenz(&["analyze", "--input", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let out = lorenz(&["analyze", "--input", fixture().to_str().unwrap(), "--max-time", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(lorenz(&["no-such-command"]).status.code(), Some(1));
}

#[test]
fn plot_writes_an_svg() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("d.svg");
    let out = lorenz(&["plot", "--out", p.to_str().unwrap(), "--interval", "-1", "1", "--t", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let svg = std::fs::read_to_string(&p).unwrap();
    assert!(svg.contains("<svg") && svg.contains("<polygon"));

    let f = dir.path().join("f.svg");
    let args = ["plot", "--out", f.to_str().unwrap(), "--flower", "0", "0.2", "0.8", "1", "0.5", "0.9"];
    assert!(lorenz(&args).status.success());
    assert_eq!(std::fs::read_to_string(&f).unwrap().matches("<polygon").count(), 3);
}

#[test]
fn iterate_writes_one_row_per_renormalization() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("flow.csv");
    let last = dir.path().join("last.json");
    let out = lorenz(&[
        "iterate",
        "--input",
        fixture().to_str().unwrap(),
        "--levels",
        "3",
        "--out",
        csv.to_str().unwrap(),
        "--map-out",
        last.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("level,"));
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&last).unwrap()).unwrap();
    assert_eq!(m["alpha"], 2.0);

    let filter = dir.path().join("thetas.json");
    std::fs::write(&filter, r#"[{"theta_minus": [0, 2, 1], "theta_plus": [1, 0]}]"#).unwrap();
    let out = lorenz(&["iterate", "--input", fixture().to_str().unwrap(), "--levels", "3", "--theta", filter.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn intervals_table() {
    let out = lorenz(&["intervals", "--input", fixture().to_str().unwrap(), "--levels", "2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("level,name,left,right,length"));
    assert!(text.lines().any(|l| l.starts_with("2,Q_minus,")));
}

#[test]
fn verify_complex_emits_the_main_inequality_report() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("report.json");
    let out = lorenz(&[
        "verify-complex",
        "--input",
        fixture().to_str().unwrap(),
        "--levels",
        "3",
        "--m-offset",
        "1",
        "--samples",
        "40",
        "--no-extension",
        "--out",
        p.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
    let main = &r["main_inequality"];
    assert_eq!(main["n"], 3);
    assert_eq!(main["m"], 1);
    assert!(main["success_rate"].as_f64().unwrap() >= 0.99);
    assert!(main["empirical_b1"].as_f64().unwrap() > 0.0);
    assert!(r["power_like_extension"].is_null());
    assert_eq!(r["config"]["samples"], 40);
}
