use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn phs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phs")).args(args).output().expect("spawn phs")
}

fn run_with(dir: &TempDir, sub: &str, config: &str, extra: &[&str]) -> Output {
    let cfg = dir.path().join("config.json");
    fs::write(&cfg, config).unwrap();
    let out = dir.path().join("out");
    let mut args = vec![sub, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    phs(&args)
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn check_acoustic_is_contraction() {
    let dir = TempDir::new().unwrap();
    let o = run_with(&dir, "check", r#"{"system": {"preset": "acoustic"}}"#, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = json(&dir.path().join("out/check.json"));
    let c = &report["classification"];
    assert_eq!(c["rank_wb"], 2);
    assert_eq!(c["contraction"], true);
    assert_eq!(c["isometric"], false);
    assert_eq!(report["lemma"]["agree"], true);
}

#[test]
fn check_isometric() {
    let dir = TempDir::new().unwrap();
    let o = run_with(&dir, "check", r#"{"system": {"preset": "isometric", "l": 0.25}}"#, &[]);
    assert_eq!(o.status.code(), Some(0));
    let c = &json(&dir.path().join("out/check.json"))["classification"];
    assert_eq!(c["isometric"], true);
    assert_eq!(c["gram_status"], "zero");
}

#[test]
fn negative_resistance_is_a_verdict_not_an_error() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"system": {"preset": "chain", "n": 2, "r": [1.0, -1.0], "a": 0, "b": 1}}"#;
    let o = run_with(&dir, "check", cfg, &[]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("negative"));
    let c = &json(&dir.path().join("out/check.json"))["classification"];
    assert_eq!(c["contraction"], false);
    assert_eq!(c["r_verdicts"], serde_json::json!([true, false]));
}

#[test]
fn simulate_uncertified_system_warns() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"system": {"preset": "chain", "n": 1, "r": [-1.0], "a": -1, "b": 1},
                  "resolution": 10, "dt": 0.01, "t_end": 0.1}"#;
    let o = run_with(&dir, "simulate", cfg, &[]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("WARNING"));
}

#[test]
fn simulate_writes_seeded_outputs() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"system": {"preset": "acoustic"}, "resolution": 30, "dt": 0.01, "t_end": 1.0,
                  "initial": {"kind": "random", "modes": 3}, "seed": 5, "record_every": 10}"#;
    let o = run_with(&dir, "simulate", cfg, &["--seed", "11"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = dir.path().join("out");

    let energy = fs::read_to_string(out.join("energy.csv")).unwrap();
    let mut lines = energy.lines();
    assert_eq!(lines.next(), Some("# seed=11"));
    assert_eq!(
        lines.next(),
        Some("t,H,boundary_power,interface_power_1,balance_residual,endpoint_residual")
    );
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 101);
    for w in rows.windows(2) {
        assert!(w[1][1] <= w[0][1] * (1.0 + 1e-12));
    }

    let traj = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("# seed=11\nt,segment,z,x1,x2\n"));
    // 11 snapshots of 2 segments with 30 nodes each.
    assert_eq!(traj.lines().count(), 2 + 11 * 60);

    let summary = json(&out.join("summary.json"));
    assert_eq!(summary["seed"], 11);
    assert_eq!(summary["steps"], 100);
    assert_eq!(summary["energy_monotone"], true);
    assert!(summary["max_balance_residual"].as_f64().unwrap() < 1e-12);
}

#[test]
fn simulate_is_reproducible() {
    let cfg = r#"{"system": {"preset": "isometric"}, "resolution": 12, "dt": 0.05, "t_end": 0.5,
                  "initial": {"kind": "random"}, "seed": 3}"#;
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    assert_eq!(run_with(&a, "simulate", cfg, &[]).status.code(), Some(0));
    assert_eq!(run_with(&b, "simulate", cfg, &[]).status.code(), Some(0));
    for f in ["energy.csv", "trajectory.csv"] {
        assert_eq!(
            fs::read(a.path().join("out").join(f)).unwrap(),
            fs::read(b.path().join("out").join(f)).unwrap()
        );
    }
}

#[test]
fn spectrum_writes_eigenvalues() {
    let dir = TempDir::new().unwrap();
    let o = run_with(&dir, "spectrum", r#"{"system": {"preset": "acoustic"}, "resolution": 20}"#, &[]);
    assert_eq!(o.status.code(), Some(0));
    let out = dir.path().join("out");
    let csv = fs::read_to_string(out.join("eigenvalues.csv")).unwrap();
    // Two segments of 20 nodes, minus four constraints.
    assert_eq!(csv.lines().count(), 2 + 76);
    assert_eq!(report_dim(&out), 76);
    let report = json(&out.join("spectrum.json"));
    assert!(report["abscissa"].as_f64().unwrap() < 0.0);
}

#[test]
fn spectrum_over_cap_exits_3() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"system": {"preset": "acoustic"}, "resolution": 50, "eigen_cap": 20}"#;
    let o = run_with(&dir, "spectrum", cfg, &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("cap"));
}

#[test]
fn transform_verify_single_interface() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"system": {"preset": "acoustic", "bulk_minus": 2.0, "rho_plus": 0.5},
                  "transform": {"functions": 10, "points": 200}}"#;
    let o = run_with(&dir, "transform-verify", cfg, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = json(&dir.path().join("out/transform.json"));
    assert_eq!(r["all_within_tolerance"], true);
    assert!(r["worst_relative_mismatch"].as_f64().unwrap() < 1e-8);
    for s in r["refinement_slopes"].as_array().unwrap() {
        assert!((s.as_f64().unwrap() - 2.0).abs() < 0.2);
    }
}

#[test]
fn transform_verify_shifts_interface() {
    let dir = TempDir::new().unwrap();
    let o = run_with(&dir, "transform-verify", r#"{"system": {"preset": "isometric", "l": 0.3}}"#, &[]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("shifting"));
}

#[test]
fn transform_verify_rejects_chains() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"system": {"preset": "chain", "n": 2, "r": [1.0, 1.0]}}"#;
    assert_eq!(run_with(&dir, "transform-verify", cfg, &[]).status.code(), Some(4));
}

#[test]
fn config_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let o = run_with(&dir, "check", r#"{"system": {"preset": "acoustic"}, "typo": 1}"#, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("typo"));

    let o = run_with(&dir, "check", r#"{"system": {"preset": "acoustic", "r_b": -1}}"#, &[]);
    assert_eq!(o.status.code(), Some(2));

    let o = run_with(&dir, "simulate", r#"{"system": {"preset": "acoustic"}}"#, &[]);
    assert_eq!(o.status.code(), Some(2));

    let o = phs(&["check", "--config", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bundled_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for entry in fs::read_dir(root).unwrap() {
        let path = entry.unwrap().path();
        let dir = TempDir::new().unwrap();
        let o = phs(&[
            "check",
            "--config",
            path.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}: {}", path.display(), stderr(&o));
    }
}

fn report_dim(out: &Path) -> u64 {
    json(&out.join("spectrum.json"))["reduced_dim"].as_u64().unwrap()
}
