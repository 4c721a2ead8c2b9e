use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mot_cascade::cascade::DualCertificate;
use mot_cascade::instance::load_instance;
use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn mot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mot"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn check_exit_codes() {
    let ok = mot(&["check", data("three_quarter.json").to_str().unwrap()]);
    assert_eq!(code(&ok), 0);
    let bad = mot(&["--json", "check", data("reversed.json").to_str().unwrap()]);
    assert_eq!(code(&bad), 2);
    assert_eq!(json(&bad)["passed"], false);

    let dir = tempfile::tempdir().unwrap();
    let broken = write(dir.path(), "broken.json", "{\"marginals\": [");
    assert_eq!(code(&mot(&["check", broken.to_str().unwrap()])), 1);
    assert_eq!(code(&mot(&["check", "/nonexistent/instance.json"])), 1);
}

#[test]
fn argument_errors_are_input_errors() {
    assert_eq!(code(&mot(&["frobnicate"])), 1);
    let inst = data("three_quarter.json");
    assert_eq!(code(&mot(&["--variant", "remark_a", "solve", inst.to_str().unwrap()])), 1);
    assert_eq!(code(&mot(&["--help"])), 0);
}

#[test]
fn solve_reports_hand_value() {
    let out = mot(&["--json", "solve", data("three_quarter.json").to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert!((v["primal"]["value"].as_f64().unwrap() - 3.0).abs() < 1e-10);
    assert!(v["gap"].as_f64().unwrap() < 1e-4);

    let upper = mot(&["--json", "solve", "--side", "upper", "--method", "primal", data("variance_three.json").to_str().unwrap()]);
    assert_eq!(code(&upper), 0);
    assert!((json(&upper)["primal"]["value"].as_f64().unwrap() - 3.0).abs() < 1e-10);
    assert!(json(&upper)["dual"].is_null());
}

#[test]
fn certificate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let inst_path = data("three_quarter.json");
    let out = mot(&[
        "--variant",
        "remark_b",
        "--out",
        dir.path().to_str().unwrap(),
        "solve",
        "--method",
        "dual",
        inst_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("certificate.json")).unwrap();
    let cert = DualCertificate::from_json(&text).unwrap();
    let inst = load_instance(&inst_path).unwrap();
    let again = cert.recompute(&inst.cost, &inst.marginals).unwrap();
    assert!((again - cert.dual_value).abs() <= 1e-10);
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("iter,"));
    assert!(dir.path().join("dual_tables.csv").exists());
}

#[test]
fn certify_writes_all_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let out = mot(&[
        "--json",
        "--out",
        dir.path().to_str().unwrap(),
        "certify",
        data("unique_coupling.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["passed"], true);
    assert!((v["primal_min"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    for sub in ["lower", "stepwise", "upper"] {
        assert!(dir.path().join(sub).join("certificate.json").exists());
    }
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);

    let infeasible = mot(&["--json", "certify", data("reversed.json").to_str().unwrap()]);
    assert_eq!(code(&infeasible), 2);
    assert_eq!(json(&infeasible)["infeasible"], true);
}

#[test]
fn oversized_grid_hits_cap() {
    let dir = tempfile::tempdir().unwrap();
    let atoms: Vec<String> = (0..100).map(|k| k.to_string()).collect();
    let weights = vec!["0.01"; 100].join(",");
    let measure = format!("{{\"atoms\": [{}], \"weights\": [{weights}]}}", atoms.join(","));
    let text = format!(
        "{{\"marginals\": [{measure}, {measure}, {measure}], \"cost\": {{\"form\": \"squared_increment\"}}}}"
    );
    let path = write(dir.path(), "big.json", &text);
    let out = mot(&["solve", "--method", "primal", path.to_str().unwrap()]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));

    let small = std::fs::read_to_string(data("three_quarter.json")).unwrap();
    let capped = small.trim_end().trim_end_matches('}').to_string() + ", \"options\": {\"max_variables\": 2}}";
    let path = write(dir.path(), "capped.json", &capped);
    assert_eq!(code(&mot(&["certify", path.to_str().unwrap()])), 3);
}

#[test]
fn envelope_and_quantize() {
    let out = mot(&["--json", "envelope", data("zigzag.csv").to_str().unwrap(), "--at", "2"]);
    assert_eq!(code(&out), 0);
    assert!((json(&out)["value"].as_f64().unwrap() + 0.5).abs() < 1e-12);

    let dir = tempfile::tempdir().unwrap();
    let out = mot(&["--out", dir.path().to_str().unwrap(), "envelope", data("tent.csv").to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(std::fs::read_to_string(dir.path().join("hull.csv")).unwrap().starts_with("x,value"));
    assert_eq!(code(&mot(&["envelope", "/nonexistent.csv"])), 1);

    let out = mot(&["--json", "quantize", "--location", "0", "--scale", "0", "--m", "1"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["atoms"], serde_json::json!([1.0]));
    let out = mot(&["--json", "quantize", "--location", "-0.02", "--scale", "0.2", "--m", "15"]);
    let mean = json(&out)["mean"].as_f64().unwrap();
    assert!((mean - 1.0).abs() < 1e-9);
    assert_eq!(code(&mot(&["quantize", "--location", "0", "--scale", "-1", "--m", "3"])), 1);
}
