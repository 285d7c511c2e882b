//! End-to-end runs of the binary: scenario outputs, determinism, and the
//! config-error exit code.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nlpot"))
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn solve_scenario_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("solve.toml");
    write(
        &cfg,
        r#"
[grid]
n = 2
h = 0.1
shape = "ball"
radius = 1.0

[measure]
atoms = [[0.0, 0.0, 6.283185307179586]]

[solve]
epsilon = 0.1
boundary = 0.0
"#,
    );
    let out = dir.path().join("out");
    let status = bin()
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    for name in ["solution.bin", "solution.csv", "measure.json", "report.json"] {
        assert!(out.join(name).exists(), "missing {name}");
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["body"]["converged"], true);
    assert_eq!(report["meta"]["grid_h"], 0.1);
    // the emitted field reads back bit-exactly
    let field = nlpot_cli::formats::read_field(&out.join("solution.bin")).unwrap();
    assert_eq!(field.grid().dim(), 2);
}

#[test]
fn malformed_config_exits_2_and_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    write(
        &cfg,
        r#"
[grid]
n = 2
h = 0.1
shape = "ball"
radius = 1.0
spacing_typo = 3
"#,
    );
    let out = bin()
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("spacing_typo"), "stderr: {stderr}");
}

#[test]
fn missing_section_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.toml");
    write(
        &cfg,
        "[grid]\nn = 2\nh = 0.1\nshape = \"ball\"\nradius = 1.0\n\n[measure]\natoms = [[0.0, 0.0, 1.0]]\n",
    );
    let out = bin()
        .args(["wolff", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("[wolff]"), "stderr: {stderr}");
}

#[test]
fn repeated_runs_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("wolff.toml");
    write(
        &cfg,
        r#"
[grid]
n = 2
h = 0.05
shape = "ball"
radius = 1.0

[measure]
atoms = [[0.25, 0.0, 1.0]]
uniform_mass = 0.5

[wolff]
points = [[0.1, 0.1], [0.4, -0.2]]
radii = [0.25, 0.5, 1.0]
"#,
    );
    let run = |out: &Path| {
        let status = bin()
            .args(["wolff", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .args(["--seed", "42"])
            .status()
            .unwrap();
        assert!(status.success());
        (
            std::fs::read(out.join("wolff.csv")).unwrap(),
            std::fs::read(out.join("report.json")).unwrap(),
        )
    };
    let (csv1, rep1) = run(&dir.path().join("a"));
    let (csv2, rep2) = run(&dir.path().join("b"));
    assert_eq!(csv1, csv2, "CSV bytes differ between identical runs");
    assert_eq!(rep1, rep2, "report bytes differ between identical runs");
}

#[test]
fn capacity_oracle_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("capacity.toml");
    write(
        &cfg,
        r#"
[grid]
n = 2
h = 0.06
shape = "ball"
radius = 2.718281828459045

[capacity]
plate_radius = 1.0
"#,
    );
    let out = dir.path().join("out");
    let status = bin()
        .args(["capacity", "--oracle", "radial", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let value = report["body"]["value"].as_f64().unwrap();
    let oracle = report["body"]["closed_form"].as_f64().unwrap();
    assert!((oracle - 2.0 * std::f64::consts::PI).abs() < 1e-9);
    assert!((value - oracle).abs() / oracle < 0.05, "{value} vs {oracle}");
}

#[test]
fn thinness_scenario_reports_a_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("thin.toml");
    write(
        &cfg,
        r#"
[thinness]
n = 2
set = "chain"
i_min = 1
i_max = 10
h_ref = 0.05
"#,
    );
    let out = dir.path().join("out");
    let status = bin()
        .args(["thinness", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["body"]["verdict"], "Thin");
    let csv = std::fs::read_to_string(out.join("series.csv")).unwrap();
    assert!(csv.lines().count() > 10);
}
