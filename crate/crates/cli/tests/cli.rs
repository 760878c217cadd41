use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn conflab(out: &Path, args: &[&str]) -> (i32, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_conflab"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs");
    (o.status.code().unwrap_or(-1), String::from_utf8_lossy(&o.stderr).into_owned())
}

fn summary(out: &Path, name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join(format!("{name}.json"))).unwrap()).unwrap()
}

#[test]
fn brennan_koebe_inside_range_is_convergent() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = conflab(dir.path(), &["brennan", "--map", "koebe", "--s", "0.5", "--eps0", "0.125", "--levels", "10"]);
    assert_eq!(code, 0, "{err}");
    let v = summary(dir.path(), "brennan");
    assert_eq!(v["results"]["verdict"]["kind"], "convergent");
    assert_eq!(v["parameters"]["levels"], 10);
    assert!(v["version"].as_str().unwrap().starts_with("conflab "));
    let csv = std::fs::read_to_string(dir.path().join("brennan-curve.csv")).unwrap();
    assert!(csv.starts_with("k,eps,B,g\n"));
    assert_eq!(csv.lines().count(), 12);
}

#[test]
fn disc_diameter_is_two() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = conflab(dir.path(), &["geodesic-diam", "--domain", "disc", "--h", "0.01"]);
    assert_eq!(code, 0, "{err}");
    let raw = summary(dir.path(), "geodesic-diam")["results"]["raw"].as_f64().unwrap();
    assert!((raw / 2.0 - 1.0).abs() < 0.03, "{raw}");
}

#[test]
fn cusp_area_experiment_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = conflab(dir.path(), &["experiment", "cusp-area", "--alpha", "2"]);
    assert_eq!(code, 0, "{err}");
    let v = summary(dir.path(), "cusp-area");
    let area = v["results"][0]["area"].as_f64().unwrap();
    assert!((area - 1.0).abs() < 0.01, "{area}");
    let csv = std::fs::read_to_string(dir.path().join("cusp-area.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("2,1.000"), "{csv}");
    assert_eq!(v["outputs"][0], "cusp-area.csv");
    assert_eq!(v["seed"], 0);
}

#[test]
fn default_cusp_table_has_three_rows() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(conflab(dir.path(), &["experiment", "cusp-area"]).0, 0);
    let csv = std::fs::read_to_string(dir.path().join("cusp-area.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert!(rows[0].starts_with("1.5,2.000") && rows[1].starts_with("2,1.000") && rows[2].starts_with("3,0.500"), "{csv}");
}

#[test]
fn range_experiments_report_expected_rows() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(conflab(dir.path(), &["experiment", "koebe-range"]).0, 0);
    let v = summary(dir.path(), "koebe-range");
    let row = v["results"].as_array().unwrap().iter().find(|r| r["s"] == 0.5).unwrap();
    assert_eq!(row["verdict"]["kind"], "convergent");
    assert_eq!(v["checks"]["single_flip"], true);
    assert!((v["checks"]["first_divergent_s"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-8);

    assert_eq!(conflab(dir.path(), &["experiment", "strip-range"]).0, 0);
    let v = summary(dir.path(), "strip-range");
    let row = v["results"].as_array().unwrap().iter().find(|r| r["s"] == 2.5).unwrap();
    assert_eq!(row["verdict"]["kind"], "power-divergent");
    assert!((row["verdict"]["q"].as_f64().unwrap() - 0.5).abs() < 0.1);
    assert_eq!(v["checks"]["first_divergent_s"], 2.0);
    assert!(dir.path().join("strip-range-curve3.csv").exists());
}

#[test]
fn runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        assert_eq!(conflab(dir.path(), &["experiment", "koebe-range", "--s", "-1,0.5,2", "--levels", "10"]).0, 0);
        assert_eq!(conflab(dir.path(), &["experiment", "strip-witness", "--x", "5,10", "--h", "0.02"]).0, 0);
    }
    let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 7);
    for name in names {
        assert_eq!(std::fs::read(a.path().join(&name)).unwrap(), std::fs::read(b.path().join(&name)).unwrap(), "{name:?}");
    }
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"map": "strip", "s": 1.5, "levels": 8}"#).unwrap();
    let out = dir.path().join("out");
    let (code, err) = conflab(&out, &["--config", cfg.to_str().unwrap(), "brennan", "--s", "2.5"]);
    assert_eq!(code, 0, "{err}");
    let v = summary(&out, "brennan");
    assert_eq!(v["parameters"]["map"], "strip");
    assert_eq!(v["parameters"]["s"], 2.5);
    assert_eq!(v["parameters"]["levels"], 8);
    assert_eq!(v["parameters"]["eps0"], 0.125);
    assert_eq!(v["results"]["verdict"]["kind"], "power-divergent");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert_eq!(conflab(out, &["brennan", "--bogus", "1"]).0, 2);
    assert_eq!(conflab(out, &["experiment", "no-such-experiment"]).0, 2);
    assert_eq!(conflab(out, &["geodesic-diam", "--domain", "annulus"]).0, 2);
    assert_eq!(conflab(out, &["brennan", "--s", "9"]).0, 2);
    assert_eq!(conflab(out, &["experiment", "cusp-area", "--alpha", "2,x"]).0, 2);
    let missing = out.join("missing.json");
    assert_eq!(conflab(out, &["--config", missing.to_str().unwrap(), "domain-info"]).0, 2);
    // Resolution overflow and an unreachable tolerance are numerical failures.
    assert_eq!(conflab(out, &["geodesic-diam", "--domain", "disc", "--h", "0.00001"]).0, 3);
    assert_eq!(conflab(out, &["sc-solve", "--vertices", "0,0;2,-0.3;3.1,0.8;2.4,2.2;0.9,2.6;-0.6,1.1", "--tol", "1e-30"]).0, 3);
    // An output path that is a file cannot become a directory.
    let file = out.join("taken");
    std::fs::write(&file, "x").unwrap();
    assert_eq!(conflab(&file, &["domain-info"]).0, 1);
    assert_eq!(conflab(out, &["--help"]).0, 0);
}

#[test]
fn sc_solve_writes_the_map() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = conflab(dir.path(), &["sc-solve", "--vertices", "1,-1;1,1;-1,1;-1,-1", "--tol", "1e-12"]);
    assert_eq!(code, 0, "{err}");
    let v = summary(dir.path(), "sc-solve");
    assert!(v["results"]["vertex_error"].as_f64().unwrap() < 1e-9);
    let map = conflab_core::conformal::ScMap::from_json(&std::fs::read_to_string(dir.path().join("sc-map.json")).unwrap()).unwrap();
    assert!(map.vertex_error().unwrap() < 1e-9);

    let (code, err) = conflab(dir.path(), &["sc-solve", "--domain", "rectangle", "--length", "4", "--normalization", "centered"]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(summary(dir.path(), "sc-solve")["parameters"]["normalization"], "centered");
}

#[test]
fn domain_info_witness_and_seminorm() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert_eq!(conflab(out, &["domain-info", "--domain", "comb", "--n", "3", "--r", "0.1"]).0, 0);
    let v = summary(out, "domain-info");
    assert!((v["results"]["analytic_area"].as_f64().unwrap() - 3.0 * std::f64::consts::PI).abs() < 1e-6);
    assert_eq!(v["results"]["slits"], 3);
    assert!(out.join("domain.json").exists());

    let (code, err) = conflab(out, &["poincare-witness", "--domain", "strip", "--xmax", "10", "--h", "0.02"]);
    assert_eq!(code, 0, "{err}");
    let k = summary(out, "poincare-witness")["results"]["bound"]["K_lower"].as_f64().unwrap();
    assert!((k / (10.0 / 8f64.sqrt()) - 1.0).abs() < 0.05, "{k}");

    let (code, err) =
        conflab(out, &["poincare-witness", "--domain", "comb", "--n", "2", "--witness", "distance", "--x0", "0,1.75", "--h", "0.02"]);
    assert_eq!(code, 0, "{err}");

    let (code, err) = conflab(out, &["sobolev-norm", "--map", "rectangle", "--length", "2", "--p", "3", "--eps", "0.001"]);
    assert_eq!(code, 0, "{err}");
    assert!(summary(out, "sobolev-norm")["results"]["seminorm"].as_f64().unwrap() > 0.0);
}
