//! End-to-end exercises of the `tricam` binary: exit codes, artifact
//! layout, determinism, and the offline diag workflow.

use std::path::{Path, PathBuf};
use std::process::Command;

fn tricam() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tricam"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tricam-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn quick_args(out: &Path) -> Vec<String> {
    [
        "run",
        "--grid-n",
        "256",
        "--t-end",
        "0.1",
        "--dt",
        "0.01",
        "--moll-n",
        "1",
        "--out",
    ]
    .iter()
    .map(|s| s.to_string())
    .chain([out.to_str().unwrap().to_string()])
    .collect()
}

#[test]
fn run_succeeds_and_writes_artifacts() {
    let dir = temp_dir("run");
    let out = dir.join("run");
    let status = tricam().args(quick_args(&out)).status().unwrap();
    assert!(status.success());
    assert!(out.join("diagnostics.csv").exists());
    assert!(out.join("run_manifest.txt").exists());
    let text = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert!(text.lines().nth(2).unwrap().starts_with("t,H1,H2_form1"));
}

#[test]
fn identical_configs_give_byte_identical_csv() {
    let dir = temp_dir("det");
    let out1 = dir.join("a");
    let out2 = dir.join("b");
    assert!(tricam().args(quick_args(&out1)).status().unwrap().success());
    assert!(tricam().args(quick_args(&out2)).status().unwrap().success());
    let t1 = std::fs::read(out1.join("diagnostics.csv")).unwrap();
    let t2 = std::fs::read(out2.join("diagnostics.csv")).unwrap();
    assert_eq!(t1, t2);
}

#[test]
fn invalid_dt_exits_2_and_names_the_key() {
    let dir = temp_dir("baddt");
    let output = tricam()
        .args(["run", "--dt=-0.5", "--out", dir.join("x").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("'dt'"), "stderr: {stderr}");
}

#[test]
fn config_file_is_read_and_flags_override() {
    let dir = temp_dir("cfgfile");
    let cfg_path = dir.join("run.cfg");
    std::fs::write(
        &cfg_path,
        "grid-n = 256\nt-end = 0.05\ndt = 0.01\nmoll-n = 1\nprofile = zero\n",
    )
    .unwrap();
    let out = dir.join("out");
    let status = tricam()
        .args([
            "run",
            "--config",
            cfg_path.to_str().unwrap(),
            "--t-end",
            "0.02",
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let manifest = std::fs::read_to_string(out.join("run_manifest.txt")).unwrap();
    assert!(manifest.contains("t-end = 0.02"), "{manifest}");
    assert!(manifest.contains("profile = zero"));
}

#[test]
fn blowup_exits_3_with_partial_artifacts() {
    let dir = temp_dir("blowup");
    let out = dir.join("run");
    let mut args = quick_args(&out);
    args.extend(["--blowup-cap".to_string(), "1e-9".to_string()]);
    let output = tricam().args(args).output().unwrap();
    assert_eq!(output.status.code(), Some(3));
    assert!(out.join("diagnostics.csv").exists());
}

#[test]
fn diag_roundtrip_pass_and_injected_fault() {
    let dir = temp_dir("diag");
    let out = dir.join("run");
    let mut args = quick_args(&out);
    args.extend([
        "--profile".to_string(),
        "gaussian-bump".to_string(),
        "--snapshot-times".to_string(),
        "0.1".to_string(),
    ]);
    assert!(tricam().args(args).status().unwrap().success());
    let snap = out.join("snapshot_t0.100000.csv");
    assert!(snap.exists());

    let status = tricam()
        .args(["diag", snap.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());

    // corrupt one u entry and expect the sign check to fail with exit 1
    let text = std::fs::read_to_string(&snap).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mid = lines.len() / 2;
    let mut fields: Vec<String> = lines[mid].split(',').map(String::from).collect();
    fields[4] = "-5.0e-1".to_string();
    lines[mid] = fields.join(",");
    std::fs::write(&snap, lines.join("\n")).unwrap();
    let output = tricam()
        .args(["diag", snap.to_str().unwrap(), "--checks", "sign"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("FAIL"), "{stdout}");
}

#[test]
fn diag_parse_error_exits_2() {
    let dir = temp_dir("diagbad");
    let snap = dir.join("bad.csv");
    std::fs::write(&snap, "x,y\n1,2\n").unwrap();
    let output = tricam().args(["diag", snap.to_str().unwrap()]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn study_runs_a_small_dt_sweep() {
    let dir = temp_dir("study");
    let out = dir.join("study");
    let status = tricam()
        .args([
            "study",
            "--grid-n",
            "128",
            "--t-end",
            "0.2",
            "--profile",
            "gaussian-bump",
            "--stride",
            "50",
            "--sweep",
            "time-step",
            "--values",
            "0.0125,0.025,0.05",
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("summary.csv").exists());
    let report = std::fs::read_to_string(out.join("study_report.txt")).unwrap();
    assert!(report.contains("mean order"), "{report}");
    assert!(report.contains("overall: PASS"), "{report}");
}

#[test]
fn env_var_sets_default_output_root() {
    let dir = temp_dir("envout");
    let status = tricam()
        .args([
            "run",
            "--grid-n",
            "256",
            "--t-end",
            "0.02",
            "--dt",
            "0.01",
            "--profile",
            "zero",
        ])
        .env("TRICAM_OUT", dir.to_str().unwrap())
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.join("run").join("diagnostics.csv").exists());
}
