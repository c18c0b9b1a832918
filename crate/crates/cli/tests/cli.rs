//! End-to-end tests driving the compiled `aggdiff` binary: artifact layout,
//! exit codes, determinism, and the sweep/compare/validate subcommands.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_aggdiff"));
    // Tests control output locations explicitly; an ambient override would
    // make them collide.
    cmd.env_remove("AGGDIFF_OUT");
    cmd
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).expect("write config");
    path
}

fn read_json(path: &Path) -> Value {
    let text = std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("read {}: {e}", path.display()));
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("parse {}: {e}", path.display()))
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process terminated by signal")
}

/// Fast self-similar run with the closed-form comparison enforced.
fn barenblatt_config(out_dir: &Path) -> String {
    format!(
        r#"
output_dir = "{}"

[model]
gamma = 2.0

[grid]
half_width = 4.0
cells = 512

[scheme]
tau = 0.002
t_final = 0.1
n_particles = 200

[initial]
profile = "barenblatt"
t0 = 1.0
mass = 1.0

[checks]
oracle = "enforce"
"#,
        out_dir.display()
    )
}

/// Small full-model run: aggregation, reaction, every check on.
fn splitting_config(out_dir: &Path, extra: &str) -> String {
    format!(
        r#"
output_dir = "{}"

[model]
gamma = 2.0
chi = 1.0
k_m = 0.5

[grid]
half_width = 6.0
cells = 256

[scheme]
tau = 0.01
t_final = 0.05
n_particles = 80
{extra}

[initial]
profile = "gaussian"
amplitude = 0.6
width = 1.2
"#,
        out_dir.display()
    )
}

#[test]
fn barenblatt_run_writes_artifacts_and_passes_enforced_oracle() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let cfg = write_config(tmp.path(), "c.toml", &barenblatt_config(&out));

    let result = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(code(&result), 0, "stderr: {}", stderr_of(&result));

    let summary = read_json(&out.join("summary.json"));
    assert_eq!(summary["schema_version"], 1);
    assert_eq!(summary["command"], "run");
    assert_eq!(summary["outcome"]["steps_completed"], 50);
    assert_eq!(summary["outcome"]["stalled"], false);
    // The discrete initial mass is a quadrature of the profile, so compare
    // against the first diagnostics row, not against the continuum mass.
    let mass = summary["outcome"]["final"]["mass"].as_f64().unwrap();
    assert!((mass - 1.0).abs() < 1e-4, "final mass {mass}");
    let oracle = summary["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["id"] == "oracle")
        .expect("oracle check present");
    assert_eq!(oracle["passed"], true, "oracle verdict: {oracle}");
    // Echoed config carries the defaults that were filled in.
    assert_eq!(summary["config"]["scheme"]["eps_grad"].as_f64().unwrap(), 1e-6);

    let diag = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    let mut lines = diag.lines();
    let header = lines.next().unwrap();
    assert_eq!(header.split(',').count(), 12);
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 50, "one row per step");
    let mass_at = |row: &str| row.split(',').nth(1).unwrap().parse::<f64>().unwrap();
    let (first, last) = (mass_at(rows[0]), mass_at(rows[49]));
    assert!(
        ((last - first) / first).abs() < 1e-12,
        "transport must conserve mass: {first} vs {last}"
    );

    assert!(out.join("snapshots/step_0.csv").exists());
    assert!(out.join("snapshots/step_50.csv").exists());
    let snap = std::fs::read_to_string(out.join("snapshots/step_50.csv")).unwrap();
    assert!(snap.starts_with("x,rho,beta,kernel_field\n"));
    assert_eq!(snap.lines().count(), 513, "header plus one row per cell");
}

#[test]
fn unknown_key_exits_one_with_suggestion() {
    let tmp = tempfile::tempdir().unwrap();
    let text = barenblatt_config(tmp.path()).replace("gamma = 2.0", "gama = 2.0");
    let cfg = write_config(tmp.path(), "c.toml", &text);
    let result = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(code(&result), 1);
    let err = stderr_of(&result);
    assert!(err.contains("did you mean \"model.gamma\""), "stderr: {err}");
}

#[test]
fn shallow_pressure_exponent_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let text = barenblatt_config(tmp.path()).replace("gamma = 2.0", "gamma = 0.5");
    let cfg = write_config(tmp.path(), "c.toml", &text);
    let result = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(code(&result), 1, "stderr: {}", stderr_of(&result));
}

#[test]
fn zero_horizon_writes_single_snapshot() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let text = barenblatt_config(&out).replace("t_final = 0.1", "t_final = 0.0");
    let cfg = write_config(tmp.path(), "c.toml", &text);
    let result = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(code(&result), 0, "stderr: {}", stderr_of(&result));

    let summary = read_json(&out.join("summary.json"));
    assert_eq!(summary["outcome"]["steps_completed"], 0);
    assert!(out.join("snapshots/step_0.csv").exists());
    let diag = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert_eq!(diag.lines().count(), 1, "header only");
}

#[test]
fn stall_exits_two_but_still_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let text = splitting_config(&out, "eps_grad = 1e-14\nmax_iters = 1");
    let cfg = write_config(tmp.path(), "c.toml", &text);
    let result = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(code(&result), 2, "stderr: {}", stderr_of(&result));

    let summary = read_json(&out.join("summary.json"));
    assert_eq!(summary["outcome"]["stalled"], true);
    assert!(out.join("diagnostics.csv").exists());
}

#[test]
fn frozen_support_fault_is_recorded_without_failing_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let text = format!(
        "{}\n[checks]\nconstraint = \"record\"\n",
        splitting_config(&out, "freeze_beta_empty = true")
    );
    let cfg = write_config(tmp.path(), "c.toml", &text);
    let result = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(code(&result), 0, "stderr: {}", stderr_of(&result));

    let summary = read_json(&out.join("summary.json"));
    let constraint = summary["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["id"] == "constraint")
        .expect("constraint check present");
    assert_eq!(constraint["mode"], "record");
    assert_eq!(constraint["passed"], false, "verdict: {constraint}");
}

#[test]
fn enforced_constraint_fault_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let text = format!(
        "{}\n[checks]\nconstraint = \"enforce\"\n",
        splitting_config(&out, "freeze_beta_empty = true")
    );
    let cfg = write_config(tmp.path(), "c.toml", &text);
    let result = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(code(&result), 3, "stderr: {}", stderr_of(&result));
    let err = stderr_of(&result);
    assert!(err.contains("constraint"), "stderr: {err}");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (out_a, out_b) = (tmp.path().join("a"), tmp.path().join("b"));
    let cfg = write_config(tmp.path(), "c.toml", &splitting_config(tmp.path(), ""));
    for out in [&out_a, &out_b] {
        let result = bin().arg("run").arg(&cfg).env("AGGDIFF_OUT", out).output().unwrap();
        assert_eq!(code(&result), 0, "stderr: {}", stderr_of(&result));
    }
    let diag_a = std::fs::read(out_a.join("diagnostics.csv")).unwrap();
    let diag_b = std::fs::read(out_b.join("diagnostics.csv")).unwrap();
    assert_eq!(diag_a, diag_b, "diagnostics must be reproducible byte for byte");
    let snap_a = std::fs::read(out_a.join("snapshots/step_5.csv")).unwrap();
    let snap_b = std::fs::read(out_b.join("snapshots/step_5.csv")).unwrap();
    assert_eq!(snap_a, snap_b);
}

#[test]
fn env_var_overrides_configured_output_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let configured = tmp.path().join("configured");
    let overridden = tmp.path().join("overridden");
    let text = barenblatt_config(&configured).replace("t_final = 0.1", "t_final = 0.0");
    let cfg = write_config(tmp.path(), "c.toml", &text);
    let result = bin().arg("run").arg(&cfg).env("AGGDIFF_OUT", &overridden).output().unwrap();
    assert_eq!(code(&result), 0, "stderr: {}", stderr_of(&result));
    assert!(overridden.join("summary.json").exists());
    assert!(!configured.exists());
}

#[test]
fn fv_mode_runs_the_grid_solver() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let text = format!("mode = \"fv-oracle\"\n{}", barenblatt_config(&out));
    let cfg = write_config(tmp.path(), "c.toml", &text);
    let result = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(code(&result), 0, "stderr: {}", stderr_of(&result));

    let summary = read_json(&out.join("summary.json"));
    assert_eq!(summary["outcome"]["steps_completed"], 50);
    let oracle = summary["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["id"] == "oracle")
        .expect("oracle check present");
    assert_eq!(oracle["passed"], true, "verdict: {oracle}");
    // Transport-specific columns are empty but the column count still matches.
    let diag = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    let row = diag.lines().nth(1).unwrap();
    assert_eq!(row.split(',').count(), 12, "row: {row}");
    assert!(row.ends_with(",,,,,"), "row: {row}");
}

#[test]
fn sweep_runs_every_value_in_its_own_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().join("sweep");
    let cfg = write_config(tmp.path(), "c.toml", &splitting_config(&root, ""));
    let result = bin()
        .args(["sweep"])
        .arg(&cfg)
        .args(["--param", "scheme.tau", "--values", "0.01,0.005"])
        .output()
        .unwrap();
    assert_eq!(code(&result), 0, "stderr: {}", stderr_of(&result));

    let report = read_json(&root.join("sweep.json"));
    assert_eq!(report["param"], "scheme.tau");
    let runs = report["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 2);
    assert!(runs.iter().all(|r| r["exit_code"] == 0), "runs: {runs:?}");
    assert!(root.join("scheme_tau=0.01/summary.json").exists());
    assert!(root.join("scheme_tau=0.005/summary.json").exists());
    // Half the step size, double the step count.
    let fine = read_json(&root.join("scheme_tau=0.005/summary.json"));
    assert_eq!(fine["outcome"]["steps_completed"], 10);
}

#[test]
fn sweep_rejects_a_bad_value_before_running_anything() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().join("sweep");
    let cfg = write_config(tmp.path(), "c.toml", &splitting_config(&root, ""));
    let result = bin()
        .args(["sweep"])
        .arg(&cfg)
        .args(["--param", "model.gamma", "--values", "2.0,0.5"])
        .output()
        .unwrap();
    assert_eq!(code(&result), 1, "stderr: {}", stderr_of(&result));
    assert!(!root.exists(), "no run may start when one derived config is invalid");
}

#[test]
fn compare_reports_distances_at_matched_times() {
    let tmp = tempfile::tempdir().unwrap();
    let coarse = splitting_config(&tmp.path().join("a"), "");
    let fine = splitting_config(&tmp.path().join("b"), "").replace("tau = 0.01", "tau = 0.005");
    let cfg_a = write_config(tmp.path(), "a.toml", &coarse);
    let cfg_b = write_config(tmp.path(), "b.toml", &fine);
    let report_path = tmp.path().join("compare.json");
    let result = bin()
        .arg("compare")
        .arg(&cfg_a)
        .arg(&cfg_b)
        .arg("--out")
        .arg(&report_path)
        .output()
        .unwrap();
    assert_eq!(code(&result), 0, "stderr: {}", stderr_of(&result));

    let report = read_json(&report_path);
    let rows = report["rows"].as_array().unwrap();
    // Coarse times 0.01..0.05 all divide into the fine run's grid of times.
    assert_eq!(rows.len(), 5);
    for row in rows {
        assert!(row["l1"].as_f64().unwrap() >= 0.0);
        // Equal masses give the quadratic transport distance; unequal ones
        // (reaction integrated with different step sizes) its relaxation.
        let metric = row.get("w2").or_else(|| row.get("dbl_upper")).unwrap();
        assert!(metric.as_f64().unwrap() >= 0.0, "row: {row}");
    }
}

#[test]
fn validate_only_kernel_prints_one_verdict() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("v");
    let result = bin()
        .args(["validate", "--only", "kernel"])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(code(&result), 0, "stderr: {}", stderr_of(&result));
    let text = stdout_of(&result);
    assert!(text.contains("[PASS] kernel"), "stdout: {text}");

    let report = read_json(&out.join("validation.json"));
    assert_eq!(report["passed"], true);
    let criteria = report["criteria"].as_array().unwrap();
    assert_eq!(criteria.len(), 1);
    assert_eq!(criteria[0]["id"], "kernel");
}

#[test]
fn validate_rejects_unknown_criterion() {
    let result = bin().args(["validate", "--only", "nonsense"]).output().unwrap();
    assert_eq!(code(&result), 1);
    let err = stderr_of(&result);
    assert!(err.contains("unknown criterion"), "stderr: {err}");
}
