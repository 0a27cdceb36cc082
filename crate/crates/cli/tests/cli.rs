//! End-to-end tests of the `morseham` binary: exit codes, artifacts,
//! report determinism, and re-verification of stored reports.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_morseham"))
}

/// One solution of the cubic system on the unit ball, desk-scale grids.
const BASE_CONFIG: &str = r#"{
  "model": {"kind": "lane_emden", "p": 3.0, "q": 3.0},
  "domain": {"kind": "ball", "radius": 1.0, "dim": 3},
  "m": 1,
  "grid": {
    "solution_nodes": 1024,
    "spectral_nodes": 257,
    "oracle_nodes": 129,
    "verify_intervals": 4096,
    "k_max": 5
  },
  "tasks": ["solve"]
}"#;

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.json");
    std::fs::write(&path, text).unwrap();
    path
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("process killed by signal")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn load_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn solve_writes_solution_csv_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), BASE_CONFIG);
    let out_dir = dir.path().join("out");
    let out =
        bin().arg("solve").arg("--config").arg(&config).arg("--out").arg(&out_dir).output().unwrap();
    assert_eq!(exit_code(&out), 0, "stderr: {}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("solution: m=1"), "{stdout}");
    assert!(out_dir.join("solution.csv").exists());
    let report = load_json(&out_dir.join("report.json"));
    assert_eq!(report["status"], "complete");
    assert!(report["solution"].is_object());
    assert!(report["spectra"].is_null());
    assert!(report["morse"].is_null());
    assert!(report["verify"].is_null());
}

#[test]
fn spectrum_grid_size_override_controls_fine_grid() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), BASE_CONFIG);
    let out_dir = dir.path().join("out");
    let out = bin()
        .arg("spectrum")
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(&out_dir)
        .args(["--grid-size", "129"])
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 0, "stderr: {}", text(&out.stderr));
    let report = load_json(&out_dir.join("report.json"));
    // Eigenvalues are extrapolated from the requested grid and its nested
    // refinement with 2M - 1 nodes; the report records the fine grid.
    assert_eq!(report["spectra"]["a"]["nodes"], 257);
    assert!(report["solution"].is_object(), "dependency solve must have run");
    for artifact in ["spectrum_a.csv", "spectrum_b.csv", "plot_data.csv"] {
        assert!(out_dir.join(artifact).exists(), "{artifact} missing");
    }
    let stdout = text(&out.stdout);
    assert!(stdout.contains("a-spectrum: 5 values"), "{stdout}");
}

#[test]
fn config_missing_field_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{
          "model": {"kind": "lane_emden", "q": 3.0},
          "domain": {"kind": "ball", "radius": 1.0, "dim": 3},
          "m": 1,
          "tasks": ["solve"]
        }"#,
    );
    let out = bin().arg("solve").arg("--config").arg(&config).output().unwrap();
    assert_eq!(exit_code(&out), 2);
    let stderr = text(&out.stderr);
    assert!(stderr.contains("missing field `p`"), "{stderr}");
}

#[test]
fn config_invalid_value_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{
          "model": {"kind": "lane_emden", "p": 3.0, "q": 3.0},
          "domain": {"kind": "ball", "radius": 1.0, "dim": 3},
          "m": 0,
          "tasks": ["solve"]
        }"#,
    );
    let out = bin().arg("solve").arg("--config").arg(&config).output().unwrap();
    assert_eq!(exit_code(&out), 2);
    let stderr = text(&out.stderr);
    assert!(stderr.contains("m must be at least 1"), "{stderr}");
}

#[test]
fn config_unreadable_path_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .arg("solve")
        .arg("--config")
        .arg(dir.path().join("no_such_file.json"))
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 2);
    let stderr = text(&out.stderr);
    assert!(stderr.contains("cannot read"), "{stderr}");
}

/// Strip the timing block; everything else must match byte for byte.
fn canonical_without_timings(path: &Path) -> String {
    let mut report = load_json(path);
    let removed = report.as_object_mut().unwrap().remove("timings_ms");
    assert!(removed.is_some(), "report lacks a timings_ms block");
    serde_json::to_string_pretty(&report).unwrap()
}

#[test]
fn verify_runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), BASE_CONFIG);
    let mut out_dirs = Vec::new();
    for name in ["out1", "out2"] {
        let out_dir = dir.path().join(name);
        let out = bin()
            .arg("verify")
            .arg("--config")
            .arg(&config)
            .arg("--out")
            .arg(&out_dir)
            .output()
            .unwrap();
        assert_eq!(exit_code(&out), 0, "stderr: {}", text(&out.stderr));
        let stdout = text(&out.stdout);
        assert!(stdout.contains("verdict: Verified"), "{stdout}");
        out_dirs.push(out_dir);
    }
    assert_eq!(
        canonical_without_timings(&out_dirs[0].join("report.json")),
        canonical_without_timings(&out_dirs[1].join("report.json"))
    );
    for artifact in ["solution.csv", "spectrum_a.csv", "spectrum_singular_a.csv"] {
        let a = std::fs::read(out_dirs[0].join(artifact)).unwrap();
        let b = std::fs::read(out_dirs[1].join(artifact)).unwrap();
        assert_eq!(a, b, "{artifact} differs between identical runs");
    }
}

#[test]
fn stored_report_reverification_classifies_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), BASE_CONFIG);
    let out_dir = dir.path().join("out");
    let out =
        bin().arg("verify").arg("--config").arg(&config).arg("--out").arg(&out_dir).output().unwrap();
    assert_eq!(exit_code(&out), 0, "stderr: {}", text(&out.stderr));
    let pristine = out_dir.join("report.json");

    // Pristine report: verified, table written when --out is given.
    let table_dir = dir.path().join("table");
    let out = bin()
        .arg("verify")
        .arg("--reports")
        .arg(&pristine)
        .arg("--out")
        .arg(&table_dir)
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 0, "stderr: {}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("overall: Verified"), "{stdout}");
    let table = load_json(&table_dir.join("verify.json"));
    assert_eq!(table["rows"].as_array().unwrap().len(), 1);

    // Radial index tampered below m: the first bound must fail from the
    // stored numbers alone.
    let mut report = load_json(&pristine);
    report["morse"]["m_lin_rad"] = 0.into();
    let tampered = dir.path().join("tampered.json");
    std::fs::write(&tampered, serde_json::to_string_pretty(&report).unwrap()).unwrap();
    let out = bin().arg("verify").arg("--reports").arg(&tampered).output().unwrap();
    assert_eq!(exit_code(&out), 1);
    let stdout = text(&out.stdout);
    assert!(stdout.contains("uno"), "{stdout}");
    assert!(stdout.contains("overall: Failed"), "{stdout}");

    // A failed report in the set dominates a verified one.
    let out = bin().arg("verify").arg("--reports").arg(&pristine).arg(&tampered).output().unwrap();
    assert_eq!(exit_code(&out), 1);

    // Threshold ambiguity propagates to the inconclusive exit code.
    let mut report = load_json(&pristine);
    report["morse"]["singular"]["ambiguous"] = true.into();
    let ambiguous = dir.path().join("ambiguous.json");
    std::fs::write(&ambiguous, serde_json::to_string_pretty(&report).unwrap()).unwrap();
    let out = bin().arg("verify").arg("--reports").arg(&ambiguous).output().unwrap();
    assert_eq!(exit_code(&out), 4);
    let stdout = text(&out.stdout);
    assert!(stdout.contains("overall: Inconclusive"), "{stdout}");

    // A report from a future major schema is refused as unreadable input.
    let mut report = load_json(&pristine);
    report["schema_version"] = "2.0.0".into();
    let bumped = dir.path().join("bumped.json");
    std::fs::write(&bumped, serde_json::to_string_pretty(&report).unwrap()).unwrap();
    let out = bin().arg("verify").arg("--reports").arg(&bumped).output().unwrap();
    assert_eq!(exit_code(&out), 2);
    let stderr = text(&out.stderr);
    assert!(stderr.contains("schema major mismatch"), "{stderr}");
}

#[test]
fn sweep_single_cell_writes_summary_and_cells() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{
          "p": [3.0],
          "q": [3.0],
          "pair_pq": true,
          "dims": [3],
          "m": [1],
          "grid": {
            "solution_nodes": 1024,
            "spectral_nodes": 257,
            "oracle_nodes": 129,
            "verify_intervals": 4096,
            "k_max": 5
          }
        }"#,
    );
    let out_dir = dir.path().join("out");
    let out = bin()
        .arg("sweep")
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(&out_dir)
        .args(["--jobs", "1"])
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 0, "stderr: {}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("sweep: 1 cells, 1 ok, 0 failed"), "{stdout}");
    let csv = std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2, "{csv}");
    assert!(lines[0].starts_with("p,q,N,m,"), "{csv}");
    assert!(lines[1].ends_with(",ok"), "{csv}");
    let cell_report = load_json(&out_dir.join("cell_000").join("report.json"));
    assert!(cell_report["morse"].is_object());
}

#[test]
fn log_level_gates_stderr_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), BASE_CONFIG);
    let run = |level: Option<&str>| {
        let out_dir = tempfile::tempdir().unwrap();
        let mut cmd = bin();
        cmd.arg("solve").arg("--config").arg(&config).arg("--out").arg(out_dir.path());
        cmd.env_remove("MORSEHAM_LOG");
        if let Some(level) = level {
            cmd.env("MORSEHAM_LOG", level);
        }
        let out = cmd.output().unwrap();
        assert_eq!(exit_code(&out), 0);
        text(&out.stderr)
    };
    let quiet = run(None);
    assert!(!quiet.contains("[morseham info]"), "{quiet}");
    assert!(!quiet.contains("[morseham debug]"), "{quiet}");
    let info = run(Some("info"));
    assert!(info.contains("[morseham info] task solve finished"), "{info}");
    assert!(!info.contains("[morseham debug]"), "{info}");
    let debug = run(Some("debug"));
    assert!(debug.contains("[morseham info]"), "{debug}");
    assert!(debug.contains("[morseham debug]"), "{debug}");
}
