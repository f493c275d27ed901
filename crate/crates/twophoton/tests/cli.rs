//! End-to-end tests of the command-line interface and its exit-code
//! contract: 0 pass, 1 verification failure, 2 config error, 3 blow-up or
//! singularity.

use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twophoton"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const OSCILLATOR: &str = r#"{
  "realization": {"n": 3, "lambda": [1.0, 1.0, 1.0]},
  "hamiltonian": {"family": "subalgebra", "subalgebra": "gl2", "expr": "0.5*Bp + Bm"},
  "verify": {"samples": 40, "tol": 1e-9, "fd_tol": 1e-5, "seed": 42},
  "simulate": {"q0": [1.0, 0.0, 0.0], "p0": [0.0, 1.0, 0.0], "dt": 0.001, "t_end": 2.0}
}"#;

#[test]
fn verify_gl2_oscillator_passes() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "osc.json", OSCILLATOR);
    let report_path = dir.path().join("report.json");
    let out = run(&[
        "verify",
        "--config",
        &config,
        "--report",
        report_path.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["pass"], serde_json::Value::Bool(true));
    let names: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(names.contains(&"extra_integral_commutes"));
    assert!(names.contains(&"bracket_table"));
}

#[test]
fn verify_is_deterministic_and_rerunnable_from_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "osc.json", OSCILLATOR);
    let r1 = dir.path().join("r1.json");
    let r2 = dir.path().join("r2.json");
    assert!(run(&[
        "verify",
        "--config",
        &config,
        "--report",
        r1.to_str().unwrap()
    ])
    .status
    .success());
    assert!(run(&[
        "verify",
        "--config",
        &config,
        "--report",
        r2.to_str().unwrap()
    ])
    .status
    .success());
    let b1 = std::fs::read(&r1).unwrap();
    let b2 = std::fs::read(&r2).unwrap();
    assert_eq!(b1, b2, "same seed must reproduce the report byte for byte");
    // the embedded config is a valid config file; re-running it reproduces
    // the same checks
    let report: serde_json::Value = serde_json::from_slice(&b1).unwrap();
    let embedded = serde_json::to_string_pretty(&report["config"]).unwrap();
    let config2 = write_config(dir.path(), "embedded.json", &embedded);
    let r3 = dir.path().join("r3.json");
    assert!(run(&[
        "verify",
        "--config",
        &config2,
        "--report",
        r3.to_str().unwrap()
    ])
    .status
    .success());
    assert_eq!(b1, std::fs::read(&r3).unwrap());
}

#[test]
fn inadmissible_symbol_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "bad.json",
        r#"{
  "realization": {"n": 2, "lambda": [1.0, 1.0]},
  "hamiltonian": {"family": "natural", "f": "Bp"}
}"#,
    );
    let report = dir.path().join("report.json");
    let out = run(&[
        "verify",
        "--config",
        &config,
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("not admissible in family natural") && stderr.contains("Bp"),
        "stderr: {stderr}"
    );
}

#[test]
fn malformed_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "broken.json", "{ not json");
    let report = dir.path().join("report.json");
    let out = run(&[
        "verify",
        "--config",
        &config,
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn overtightened_tolerance_exits_one() {
    // float limits: residuals near 1e-15 cannot meet 1e-18
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "osc.json", OSCILLATOR);
    let report = dir.path().join("report.json");
    let out = run(&[
        "verify",
        "--config",
        &config,
        "--report",
        report.to_str().unwrap(),
        "--tol",
        "1e-18",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(parsed["pass"], serde_json::Value::Bool(false));
}

#[test]
fn simulate_free_particle_gives_linear_motion() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "free.json",
        r#"{
  "realization": {"n": 2, "lambda": [1.0, 1.0]},
  "hamiltonian": {"family": "generic", "expr": "0.5*Bp"},
  "simulate": {"q0": [0.0, 1.0], "p0": [0.5, -0.25], "dt": 0.01, "t_end": 1.0,
               "observables": ["H", "C_left[2]"]}
}"#,
    );
    let out_path = dir.path().join("traj.csv");
    let out = run(&[
        "simulate",
        "--config",
        &config,
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(&out_path).unwrap();
    let last = csv.lines().last().unwrap();
    let cells: Vec<f64> = last.split(',').map(|c| c.parse().unwrap()).collect();
    // q(t) = q0 + p0 t at t = 1
    assert!((cells[0] - 1.0).abs() < 1e-12);
    assert!((cells[1] - 0.5).abs() < 1e-9);
    assert!((cells[2] - 0.75).abs() < 1e-9);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("traj.drift.json")).unwrap())
            .unwrap();
    assert_eq!(summary["termination"], "completed");
}

#[test]
fn simulate_natural_family_conserves_the_integrals() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "natural.json",
        r#"{
  "realization": {"n": 4, "lambda": [1.0, 0.9, 1.1, 0.8]},
  "hamiltonian": {"family": "natural", "f": "Bm^2"},
  "simulate": {"q0": [0.6, -0.4, 0.8, 0.2], "p0": [0.1, 0.5, -0.3, 0.7],
               "dt": 0.001, "t_end": 10.0}
}"#,
    );
    let out_path = dir.path().join("traj.csv");
    let out = run(&[
        "simulate",
        "--config",
        &config,
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("traj.drift.json")).unwrap())
            .unwrap();
    for entry in summary["drift"].as_array().unwrap() {
        let drift = entry["max_relative_drift"].as_f64().unwrap();
        assert!(drift <= 1e-6, "{entry}");
    }
}

#[test]
fn simulate_into_a_singularity_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "singular.json",
        r#"{
  "realization": {"n": 2, "lambda": [1.0, 1.0]},
  "hamiltonian": {"family": "subalgebra", "subalgebra": "Dm", "expr": "Am^2/Bm + K"},
  "simulate": {"q0": [0.02, 0.01], "p0": [-1.0, 0.0], "dt": 0.001, "t_end": 5.0,
               "observables": ["H"]}
}"#,
    );
    let out_path = dir.path().join("traj.csv");
    let out = run(&[
        "simulate",
        "--config",
        &config,
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn check_axioms_is_deterministic() {
    let out1 = run(&[
        "check-axioms",
        "--n",
        "4",
        "--samples",
        "100",
        "--seed",
        "42",
    ]);
    assert!(out1.status.success());
    let out2 = run(&[
        "check-axioms",
        "--n",
        "4",
        "--samples",
        "100",
        "--seed",
        "42",
    ]);
    assert_eq!(out1.stdout, out2.stdout, "same seed, same bytes");
    let report: serde_json::Value = serde_json::from_slice(&out1.stdout).unwrap();
    assert_eq!(report["pass"], serde_json::Value::Bool(true));
}

#[test]
fn check_axioms_rejects_n_zero() {
    let out = run(&["check-axioms", "--n", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn shipped_configs_verify_and_simulate_clean() {
    let dir = tempfile::tempdir().unwrap();
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&configs).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        seen += 1;
        let report = dir.path().join(format!("report_{seen}.json"));
        let out = run(&[
            "verify",
            "--config",
            path.to_str().unwrap(),
            "--report",
            report.to_str().unwrap(),
            "--samples",
            "25",
        ]);
        assert!(
            out.status.success(),
            "{path:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let csv = dir.path().join(format!("traj_{seen}.csv"));
        let out = run(&[
            "simulate",
            "--config",
            path.to_str().unwrap(),
            "--out",
            csv.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{path:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let summary: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(csv.with_extension("drift.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(summary["termination"], "completed", "{path:?}");
        for entry in summary["drift"].as_array().unwrap() {
            let drift = entry["max_relative_drift"].as_f64().unwrap();
            assert!(drift <= 1e-6, "{path:?}: {entry}");
        }
    }
    assert!(seen >= 5, "expected the shipped config set, found {seen}");
}
