//! End-to-end tests of the `mwqc` binary: exit codes, output formats,
//! config handling and the ad-hoc computation commands.

use std::path::PathBuf;
use std::process::{Command, Output};

fn mwqc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mwqc"))
        .args(args)
        .env_remove("MWQC_SEED")
        .output()
        .expect("binary runs")
}

fn mwqc_with_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mwqc"))
        .args(args)
        .env_remove("MWQC_SEED")
        .env(key, value)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn temp_file(name: &str, contents: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("mwqc-test-{}-{name}", std::process::id()));
    std::fs::write(&path, contents).expect("temp file");
    path
}

#[test]
fn run_all_passes_on_a_fresh_checkout() {
    let output = mwqc(&["run-all"]);
    assert!(output.status.success(), "stderr: {}", stderr(&output));
    let text = stdout(&output);
    assert_eq!(text.matches("[PASS]").count(), 14, "{text}");
    assert!(!text.contains("[FAIL]"));
    assert!(text.contains("14/14 scenarios passed"));
}

#[test]
fn run_all_json_is_line_delimited_and_deterministic() {
    let config = temp_file(
        "fast.json",
        r#"{
            "overrides": {
                "cauchy-2var": {"trials": 3, "nodes": 64},
                "cauchy-3var": {"trials": 1, "nodes": 32},
                "conformal-invariance": {"grid": 64},
                "parser-roundtrip": {"trials": 100},
                "qc-classification": {"cases": 10, "grid": 32}
            }
        }"#,
    );
    let config_arg = config.to_str().unwrap();
    let a = mwqc(&["run-all", "--config", config_arg, "--format", "json"]);
    assert!(a.status.success(), "stderr: {}", stderr(&a));
    let lines: Vec<String> = stdout(&a).lines().map(str::to_string).collect();
    assert_eq!(lines.len(), 14);
    let mut ids = Vec::new();
    for line in &lines {
        let value: serde_json::Value = serde_json::from_str(line).expect("valid JSON line");
        assert_eq!(value["status"], "pass", "{line}");
        assert!(value["claim"].is_string());
        ids.push(value["scenario"].as_str().unwrap().to_string());
    }
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted, "reports are ordered by scenario id");

    // byte-identical given the same seed and parameters
    let b = mwqc(&["run-all", "--config", config_arg, "--format", "json"]);
    assert_eq!(a.stdout, b.stdout);
    std::fs::remove_file(config).ok();
}

#[test]
fn reduced_resolution_still_passes() {
    let config = temp_file(
        "grid64.json",
        r#"{"overrides": {"conformal-invariance": {"grid": 64}}}"#,
    );
    let output = mwqc(&[
        "run",
        "conformal-invariance",
        "--grid",
        "64",
    ]);
    assert!(output.status.success(), "stderr: {}", stderr(&output));
    std::fs::remove_file(config).ok();
}

#[test]
fn malformed_config_is_a_usage_error_with_location() {
    let config = temp_file("broken.json", "{\n  \"overrides\": {\n");
    let output = mwqc(&["run-all", "--config", config.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    let err = stderr(&output);
    assert!(err.contains("line"), "{err}");
    assert!(err.contains("column"), "{err}");
    std::fs::remove_file(config).ok();
}

#[test]
fn unknown_scenario_in_config_is_rejected() {
    let config = temp_file("unknown.json", r#"{"overrides": {"no-such": {}}}"#);
    let output = mwqc(&["run-all", "--config", config.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr(&output).contains("no-such"));
    std::fs::remove_file(config).ok();
}

#[test]
fn run_rejects_unknown_ids_and_parameters() {
    let output = mwqc(&["run", "no-such-scenario"]);
    assert_eq!(output.status.code(), Some(2));
    let output = mwqc(&["run", "affine-star", "--bogus", "1"]);
    assert_eq!(output.status.code(), Some(2));
    let output = mwqc(&["run", "affine-star", "--trials", "\"ten\""]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn seed_precedence_env_then_flag() {
    let base = mwqc(&["run", "associativity", "--format", "json"]);
    let env = mwqc_with_env(&["run", "associativity", "--format", "json"], "MWQC_SEED", "7");
    let flag = mwqc_with_env(
        &["run", "associativity", "--seed", "7", "--format", "json"],
        "MWQC_SEED",
        "99",
    );
    let explicit = mwqc(&["run", "associativity", "--seed", "7", "--format", "json"]);
    assert!(base.status.success());
    assert!(env.status.success());
    // a different seed changes the draws, hence the residuals
    assert_ne!(stdout(&base), stdout(&env));
    // an explicit --seed beats the environment
    assert_eq!(stdout(&flag), stdout(&explicit));
    assert!(stdout(&env).contains("\"seed\":7"));
}

#[test]
fn star_command_prints_the_expanded_canonical_form() {
    let output = mwqc(&["star", "--f", "2*z+zbar", "--g", "3*z-zbar", "--hbar", "1"]);
    assert!(output.status.success());
    assert_eq!(stdout(&output).trim(), "-5i-zbar^2+z*zbar+6*z^2");
    // order 0 truncation is the plain product: no -5i term
    let product = mwqc(&[
        "star", "--f", "2*z+zbar", "--g", "3*z-zbar", "--hbar", "1", "--order", "0",
    ]);
    assert_eq!(stdout(&product).trim(), "-zbar^2+z*zbar+6*z^2");
}

#[test]
fn poisson_command() {
    let output = mwqc(&["poisson", "--f", "z", "--g", "zbar"]);
    assert!(output.status.success());
    assert_eq!(stdout(&output).trim(), "1");
}

#[test]
fn mu_command_exact_and_grid_fallback() {
    let output = mwqc(&["mu", "--f", "z + 0.5*zbar"]);
    assert!(output.status.success());
    assert_eq!(stdout(&output).trim(), "0.5");

    // z*zbar has no constant-mu pattern; the field has |mu| = 1 pointwise
    let output = mwqc(&["mu", "--f", "z*zbar", "--grid", "16", "--format", "json"]);
    assert!(output.status.success(), "stderr: {}", stderr(&output));
    let value: serde_json::Value = serde_json::from_str(stdout(&output).trim()).unwrap();
    assert_eq!(value["kind"], "pointwise_field");
    assert!((value["abs_max"].as_f64().unwrap() - 1.0).abs() < 1e-9);

    // zbar alone: the Beltrami equation is undefined
    let output = mwqc(&["mu", "--f", "zbar"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr(&output).contains("undefined"));
}

#[test]
fn qc_command_flags_condition_three_with_a_witness() {
    let output = mwqc(&["qc", "--f", "zbar", "--grid", "64"]);
    assert_eq!(output.status.code(), Some(1));
    let text = stdout(&output);
    assert!(text.contains("not quasiconformal"), "{text}");
    assert!(text.contains("VanishingDz"), "{text}");

    let output = mwqc(&["qc", "--f", "z + 0.5*zbar", "--grid", "64", "--format", "json"]);
    assert!(output.status.success());
    let value: serde_json::Value = serde_json::from_str(stdout(&output).trim()).unwrap();
    assert_eq!(value["verdict"], true);
    assert!((value["k_hat"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn cauchy_command_reproduces_the_direct_value() {
    let output = mwqc(&[
        "cauchy", "--alphas", "1,2", "--mus", "0.3,-0.2i", "--z0", "0.1+0.2i", "--hbar", "0.5",
        "--format", "json",
    ]);
    assert!(output.status.success(), "stderr: {}", stderr(&output));
    let value: serde_json::Value = serde_json::from_str(stdout(&output).trim()).unwrap();
    assert!(value["residual"].as_f64().unwrap() <= 1e-8);

    // a target outside the contour is a module error
    let output = mwqc(&[
        "cauchy", "--alphas", "1", "--mus", "3", "--radius", "2", "--format", "json",
    ]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr(&output).contains("strictly inside"));
}

#[test]
fn parse_errors_pass_through_with_nonzero_exit() {
    let output = mwqc(&["star", "--f", "z+", "--g", "z"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr(&output).contains("expected"));

    let output = mwqc(&["mu", "--f", "exp(z*z)"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr(&output).contains("byte 4"));
}

#[test]
fn usage_errors_exit_with_two() {
    let output = mwqc(&["no-such-command"]);
    assert_eq!(output.status.code(), Some(2));
    let output = mwqc(&["qc", "--f", "z", "--k-threshold", "1.5"]);
    assert_eq!(output.status.code(), Some(2));
}
