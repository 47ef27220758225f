use rhls_cli::run_command;
use serde_json::Value;
use std::path::Path;
use std::process::Command;

fn run_to(dir: &Path, name: &str, args: &[&str]) -> (i32, String) {
    let out = dir.join(name);
    let mut argv = vec!["rhls"];
    argv.extend_from_slice(args);
    let out_str = out.to_str().unwrap().to_string();
    argv.push("--out");
    argv.push(&out_str);
    let code = run_command(argv);
    let text = std::fs::read_to_string(&out).unwrap_or_default();
    (code, text)
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

#[test]
fn constants_report() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = run_to(dir.path(), "c.json", &["constants", "--n", "2", "--lambda", "1"]);
    assert_eq!(code, 0);
    let v = json(&text);
    assert!((v["result"]["sharp"].as_f64().unwrap() - 3.5449077).abs() < 1e-6);
    assert_eq!(v["command"], "constants");
    assert_eq!(v["version"], rhls::VERSION);
    assert_eq!(v["config"]["n"], 2);
    assert!(v["rel_err_estimate"].is_number());
}

#[test]
fn pole_is_a_domain_error() {
    assert_eq!(run_command(["rhls", "constants", "--n", "2", "--lambda", "2"]), 1);
}

#[test]
fn usage_errors() {
    assert_eq!(run_command(["rhls", "frobnicate"]), 1);
    assert_eq!(run_command(["rhls", "constants", "--lambda", "1"]), 1);
    assert_eq!(run_command(["rhls", "verify", "--n", "1", "--lambda", "1", "--f", "cube"]), 1);
    assert_eq!(run_command(["rhls", "constants", "--n", "2", "--lambda", "1", "--format", "xml"]), 1);
}

#[test]
fn near_compatible_exponents_snap() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["verify", "--n", "1", "--p", "0.6667", "--r", "0.6667", "--lambda", "1", "--f", "ball", "--g", "ball"];
    let (code, text) = run_to(dir.path(), "v.json", &args);
    assert_eq!(code, 0);
    let v = json(&text);
    assert!((v["result"]["lhs"].as_f64().unwrap() - 8.0 / 3.0).abs() < 1e-4);
    assert_eq!(v["pass"], true);
    assert!((v["result"]["adjusted"]["to"]["p"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-15);
    // far from compatible stays an error
    assert_eq!(run_command(["rhls", "verify", "--n", "1", "--p", "0.7", "--r", "0.6", "--lambda", "1"]), 1);
}

#[test]
fn reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["rearrange", "--n", "2", "--lambda", "1", "--seed", "9"];
    let (c1, a) = run_to(dir.path(), "a.json", &args);
    // same --out, since the config echo includes it
    let (c2, b) = run_to(dir.path(), "a.json", &args);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(a, b);
    let (_, c) = run_to(dir.path(), "c.json", &["rearrange", "--n", "2", "--lambda", "1", "--seed", "10"]);
    assert_ne!(a, c);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"command": "constants", "n": 3, "lambda": 1.0}"#).unwrap();
    let cfg_s = cfg.to_str().unwrap();
    let (code, text) = run_to(dir.path(), "o.json", &["constants", "--config", cfg_s]);
    assert_eq!(code, 0);
    assert_eq!(json(&text)["result"]["n"], 3);
    let (_, text) = run_to(dir.path(), "o2.json", &["constants", "--config", cfg_s, "--n", "2"]);
    assert_eq!(json(&text)["result"]["n"], 2);
    // a config written for another command is refused
    assert_eq!(run_command(["rhls", "verify", "--config", cfg_s]), 1);
    std::fs::write(&cfg, r#"{"n": 3, "lamda": 1.0}"#).unwrap();
    assert_eq!(run_command(["rhls", "constants", "--config", cfg_s]), 1);
}

#[test]
fn csv_tables() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = run_to(dir.path(), "m.csv", &["minimize", "--n", "1", "--lambda", "1", "--format", "csv"]);
    assert_eq!(code, 0);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("r,f"));
    assert_eq!(lines.count(), 513);
    assert!(!text.contains("\r\n"));
    let (_, text) = run_to(dir.path(), "c.csv", &["constants", "--n", "2", "--lambda", "1", "--format", "csv"]);
    assert!(text.starts_with("key,value\n"));
    assert!(text.contains("\nsharp,3.54490770181"));
}

#[test]
fn profile_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ball.csv");
    std::fs::write(&path, rhls::profiles::unit_ball_indicator(1).to_csv()).unwrap();
    let f = format!("file:{}", path.to_str().unwrap());
    let (code, text) = run_to(dir.path(), "v.json", &["verify", "--n", "1", "--lambda", "1", "--f", &f, "--g", "bubble:1:1"]);
    assert_eq!(code, 0, "{text}");
    assert!(json(&text)["result"]["lhs"].as_f64().unwrap() > 0.0);
}

#[test]
fn solver_and_spheres() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = run_to(dir.path(), "s.json", &["solve-system", "--n", "1", "--p", "2"]);
    assert_eq!(code, 0);
    let v = json(&text);
    let ab = v["result"]["solver"]["ab_product"].as_f64().unwrap();
    assert!((ab - (std::f64::consts::PI / 2.0).cbrt()).abs() < 1e-4);
    let (code, text) = run_to(dir.path(), "sp.json", &["spheres", "--n", "1", "--p", "2", "--center", "0.5"]);
    assert_eq!(code, 0);
    let v = json(&text);
    assert!(v["result"]["residual"]["residual"].as_f64().unwrap() < 1e-4);
    let lb = v["result"]["critical_radius"]["lambda_bar"].as_f64().unwrap();
    let expected = v["result"]["expected_lambda_bar"].as_f64().unwrap();
    assert!((lb - expected).abs() < 1e-3);
}

#[test]
fn log_limit_reports_the_failed_closed_form_bound() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = run_to(dir.path(), "l.json", &["log-limit", "--n", "1"]);
    let v = json(&text);
    assert!((v["result"]["log_limit"].as_f64().unwrap() - (2.0 * std::f64::consts::PI).ln()).abs() < 1e-10);
    assert_eq!(v["result"]["ball"]["pass_bubble"], true);
    // the closed-form constant's derivative puts the right side above the functional
    assert_eq!(v["result"]["ball"]["pass"], false);
    assert_eq!(code, 2);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_rhls");
    let ok = Command::new(bin).args(["constants", "--n", "2", "--lambda", "1"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("\"sharp\": 3.5449077"));
    let bad = Command::new(bin).args(["constants", "--n", "2", "--lambda", "2"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("pole"));
    let usage = Command::new(bin).output().unwrap();
    assert_eq!(usage.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&usage.stderr).contains("Usage"));
}
