//! End-to-end checks of the binary: exit codes, artifacts, determinism.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hyperhelm"))
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("exp.cfg");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn solve_roundtrip_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "experiment = solve\ngeometry = hyperbolic\ndim = 3\nlambda = 2\nr_max = 20\ntol = 1e-9\n",
    );
    let out = bin()
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("PASS"));
    assert!(dir.path().join("out/report.json").exists());
    assert!(dir.path().join("out/solution.csv").exists());
}

#[test]
fn hypothesis_violation_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    // V below the spectral threshold kappa^2/4 = 1
    let cfg = write_config(
        dir.path(),
        "experiment = solve\ngeometry = hyperbolic\ndim = 3\nV = const:0.5\n",
    );
    let out = bin()
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("FAIL"), "{stdout}");
}

#[test]
fn bad_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "experiment == solve\n");
    let out = bin()
        .args(["solve", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    // subcommand / config mismatch
    let cfg = write_config(dir.path(), "experiment = energy\n");
    let out = bin()
        .args(["solve", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "experiment = solve\nlambda = 1\nr_max = 15\ntol = 1e-8\nseed = 9\n",
    );
    for sub in ["a", "b"] {
        let out = bin()
            .args(["solve", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(dir.path().join(sub))
            .output()
            .unwrap();
        assert!(out.status.success());
    }
    let a = std::fs::read(dir.path().join("a/solution.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/solution.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn emit_plot_data_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "experiment = solve\nlambda = 1\nr_max = 15\ntol = 1e-8\n",
    );
    let out = bin()
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .args(["--emit", "r,u"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("out/plot_r_u.csv").exists());
    let text = std::fs::read_to_string(dir.path().join("out/plot_r_u.csv")).unwrap();
    assert!(text.starts_with("r,u\n"));
}
