use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nullfrenet"))
}

fn write_config(dir: &Path, name: &str, body: &Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(body).unwrap()).unwrap();
    path
}

fn run(mode: &str, config: &Path) -> Output {
    bin().args([mode, "--config"]).arg(config).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("process exited normally")
}

/// Rows of a CSV file without the hash line, as numbers.
fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config_hash: "));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<f64>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[i]).collect()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sim.json",
        &json!({
            "dimension": 3,
            "model": {"kind": "linear_k1", "alpha": 1.5, "beta": 1.0, "dimension": 3},
            "initial": {"gamma3": -0.75, "e3": 0.5, "kappa0": 0.0},
            "integrator": {"h": 0.01, "sigma_max": 4.0}
        }),
    );
    let o = run("simulate", &cfg);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("out");
    let names = ["profile.csv", "trajectory.csv", "charges.csv", "drift.json"];
    let first: Vec<Vec<u8>> = names.iter().map(|n| fs::read(out.join(n)).unwrap()).collect();
    assert_eq!(code(&run("simulate", &cfg)), 0);
    for (n, bytes) in names.iter().zip(&first) {
        assert_eq!(&fs::read(out.join(n)).unwrap(), bytes, "{n} changed between runs");
    }
    let hash = read_json(&out.join("drift.json"))["config_hash"].as_str().unwrap().to_string();
    let text = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), format!("# config_hash: {hash}"));
}

#[test]
fn malformed_configs_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(dir.path(), "a.json", &json!({"dimension": 4, "helix": {"kappa1": -0.5}, "extra": 1}));
    assert_eq!(code(&run("helix", &unknown)), 1);
    let missing = write_config(dir.path(), "b.json", &json!({"dimension": 4}));
    assert_eq!(code(&run("simulate", &missing)), 1);
    assert_eq!(code(&run("helix", &dir.path().join("absent.json"))), 1);
}

fn extract_config(dir: &Path, curve: &Value, dim: u32) -> PathBuf {
    fs::write(dir.join("curve.json"), curve.to_string()).unwrap();
    write_config(
        dir,
        "extract.json",
        &json!({"dimension": dim, "integrator": {"h": 0.05}, "io": {"input": "curve.json"}}),
    )
}

#[test]
fn empty_samples_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = extract_config(dir.path(), &json!({"dimension": 4, "kind": "samples", "samples": []}), 4);
    let o = run("extract", &cfg);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn straight_null_ray_fails_extraction_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let samples: Vec<Value> = (0..40)
        .map(|i| {
            let l = 0.1 * i as f64;
            json!({"lambda": l, "x": [l, l, 0.0, 0.0], "derivatives": [[1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0]]})
        })
        .collect();
    let cfg = extract_config(dir.path(), &json!({"dimension": 4, "kind": "samples", "samples": samples}), 4);
    let o = run("extract", &cfg);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("sigma"));
}

#[test]
fn builtin_curves_extract_to_their_curvatures() {
    let dir = tempfile::tempdir().unwrap();
    let cubic =
        json!({"dimension": 4, "kind": "builtin", "builtin": {"name": "null_cubic", "params": {"sigma_max": 2.0}}});
    assert_eq!(code(&run("extract", &extract_config(dir.path(), &cubic, 4))), 0);
    let (h, rows) = csv_rows(&dir.path().join("out/profile.csv"));
    assert!(rows.len() > 30);
    for name in ["kappa1", "kappa2"] {
        assert!(column(&h, &rows, name).iter().all(|v| v.abs() < 1e-9), "{name}");
    }
    let gram = read_json(&dir.path().join("out/gram.json"));
    assert!(gram["max_gram_residual"].as_f64().unwrap() < 1e-9);

    let helix = json!({"dimension": 3, "kind": "builtin", "builtin": {"name": "helix", "params": {"kappa1": -0.5, "sigma_max": 3.0}}});
    assert_eq!(code(&run("extract", &extract_config(dir.path(), &helix, 3))), 0);
    let (h, rows) = csv_rows(&dir.path().join("out/profile.csv"));
    assert!(column(&h, &rows, "kappa1").iter().all(|v| (v + 0.5).abs() < 1e-9));
    assert!(column(&h, &rows, "sigma").last().unwrap() > &2.9);
}

#[test]
fn reconstructed_curve_extracts_back() {
    let dir = tempfile::tempdir().unwrap();
    let rec = write_config(
        dir.path(),
        "rec.json",
        &json!({
            "dimension": 4,
            "profile": {"kind": "constant", "kappa1": -1.0, "kappa2": 0.5},
            "integrator": {"h": 0.001, "sigma_max": 2.0},
            "io": {"output_dir": "rec"}
        }),
    );
    assert_eq!(code(&run("reconstruct", &rec)), 0);
    let summary = read_json(&dir.path().join("rec/summary.json"));
    assert!(summary["max_gram_residual"].as_f64().unwrap() < 1e-8);
    let ext = write_config(
        dir.path(),
        "ext.json",
        &json!({"dimension": 4, "integrator": {"h": 0.1}, "io": {"input": "rec/curve.json", "output_dir": "ext"}}),
    );
    let o = run("extract", &ext);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = csv_rows(&dir.path().join("ext/profile.csv"));
    for (k1, k2) in column(&h, &rows, "kappa1").iter().zip(column(&h, &rows, "kappa2")) {
        assert!((k1 + 1.0).abs() < 1e-6 && (k2 - 0.5).abs() < 1e-6, "{k1} {k2}");
    }
}

#[test]
fn arclength_simulation_logs_unit_mass() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.json",
        &json!({
            "dimension": 4,
            "model": {"kind": "pseudo_arclength", "alpha": 1.0, "dimension": 4},
            "initial": {"kappa1": -0.5},
            "integrator": {"h": 0.01, "sigma_max": 10.0}
        }),
    );
    assert_eq!(code(&run("simulate", &cfg)), 0);
    let (h, rows) = csv_rows(&dir.path().join("out/charges.csv"));
    assert!(column(&h, &rows, "mass2").iter().all(|m| (m - 1.0).abs() < 1e-9));
}

#[test]
fn second_curvature_model_with_flat_kappa2_gives_linear_kappa1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.json",
        &json!({
            "dimension": 4,
            "model": {"kind": "linear_k2", "lambda2": 1.0, "dimension": 4},
            "initial": {"state": [0.0, 0.0, 0.0, -1.0, 0.25]},
            "integrator": {"h": 0.01, "sigma_max": 4.0}
        }),
    );
    assert_eq!(code(&run("simulate", &cfg)), 0);
    let out = dir.path().join("out");
    assert!(!out.join("charges.csv").exists());
    let (h, rows) = csv_rows(&out.join("profile.csv"));
    for (s, k1) in column(&h, &rows, "sigma").iter().zip(column(&h, &rows, "kappa1")) {
        assert!((k1 - (-1.0 + 0.25 * s)).abs() < 1e-12);
    }
    assert!(column(&h, &rows, "eom0").iter().chain(&column(&h, &rows, "eom1")).all(|r| *r == 0.0));
}

#[test]
fn blow_up_exits_3_and_keeps_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.json",
        &json!({
            "dimension": 4,
            "model": {"kind": "linear_k1", "alpha": -1.0, "beta": 1.0, "dimension": 4},
            "initial": {"gamma4": 0.2, "state": [-1.5, 0.1, 0.5, 0.0]},
            "integrator": {"h": 0.001, "sigma_max": 10.0}
        }),
    );
    let o = run("simulate", &cfg);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = csv_rows(&dir.path().join("out/trajectory.csv"));
    let last = *column(&h, &rows, "sigma").last().unwrap();
    assert!(last > 1.0 && last < 10.0);
    assert_eq!(read_json(&dir.path().join("out/drift.json"))["integration"]["completed"], false);
}

#[test]
fn fast_growing_frames_trip_the_drift_monitor() {
    // kappa1 = alpha/beta > 0 with kappa2 != 0: the frame grows like e^{1.2 sigma}
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.json",
        &json!({
            "dimension": 4,
            "model": {"kind": "linear_k1", "alpha": 1.0, "beta": 2.0, "dimension": 4},
            "initial": {"gamma4": -1.375, "state": [0.5, 0.0, 0.75, 0.0]},
            "integrator": {"h": 0.001, "sigma_max": 10.0}
        }),
    );
    let o = run("simulate", &cfg);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
    let drift = read_json(&dir.path().join("out/drift.json"));
    assert_eq!(drift["charges"]["any_flagged"], true);
    assert_eq!(drift["max_eom_residual"], 0.0);
}

#[test]
fn planar_verify_passes_without_kappa2_checks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "v.json",
        &json!({"dimension": 3, "verify": {"grid": 21, "deformations": 5}, "io": {"formats": ["json"]}}),
    );
    let o = run("verify", &cfg);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&dir.path().join("out/verify.json"));
    assert_eq!(r["all_passed"], true);
    let names: Vec<&str> = r["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert!(names.iter().any(|n| n.ends_with("/kappa1")));
    assert!(!names.iter().any(|n| n.contains("kappa2")));
    assert!(!dir.path().join("out/verify.csv").exists());
}

#[test]
fn helix_mode_reports_casimirs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "h.json",
        &json!({"dimension": 3, "helix": {"kappa1": -0.5}, "integrator": {"h": 0.05, "sigma_max": 5.0}}),
    );
    assert_eq!(code(&run("helix", &cfg)), 0);
    let c = read_json(&dir.path().join("out/casimirs.json"));
    assert_eq!(c["mass2_analytic"], 1.0);
    assert!((c["mass2"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((c["casimir2"].as_f64().unwrap() + 1.0).abs() < 1e-10);
}

#[test]
fn sweep_isolates_outputs() {
    let dir = tempfile::tempdir().unwrap();
    for (name, k) in [("a.json", -0.5), ("b.json", -1.0)] {
        write_config(
            dir.path(),
            name,
            &json!({"dimension": 4, "helix": {"kappa1": k}, "integrator": {"h": 0.1, "sigma_max": 2.0}}),
        );
    }
    let o = bin().args(["helix", "--sweep"]).arg(dir.path()).output().unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let ma = read_json(&dir.path().join("out/a/casimirs.json"))["mass2"].as_f64().unwrap();
    let mb = read_json(&dir.path().join("out/b/casimirs.json"))["mass2"].as_f64().unwrap();
    assert!((ma - 1.0).abs() < 1e-12 && (mb - 2.0).abs() < 1e-12);
}
