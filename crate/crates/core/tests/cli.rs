use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn plank(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plank"))
        .args(args)
        .env_remove("PLANK_SEED")
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

fn extremal(dir: &Path, n: usize) -> String {
    let path = dir.join(format!("extremal_{n}.json"));
    let p = path.to_str().unwrap();
    assert_eq!(plank(&["gen", "--extremal", &n.to_string(), "-o", p]).status.code(), Some(0));
    p.to_owned()
}

#[test]
fn verify_extremal_passes_with_equality() {
    let dir = tempfile::tempdir().unwrap();
    let out = plank(&["verify", &extremal(dir.path(), 5)]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["overall"], true);
    let margin = r["witness"]["min_margin"].as_f64().unwrap();
    let bound = 5f64.sqrt() * (std::f64::consts::PI / 10.0).sin();
    assert!((margin - bound).abs() <= 1e-9);
}

#[test]
fn verify_orthonormal_basis() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "e3.json", r#"{"vectors": [[1,0,0],[0,1,0],[0,0,1]]}"#);
    let out = plank(&["verify", &input, "--oracle"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["overall"], true);
    // w = (1,1,1) up to sign, all margins 1
    let margins = r["witness"]["margins"].as_array().unwrap();
    assert!(margins.iter().all(|m| (m.as_f64().unwrap().abs() - 1.0).abs() <= 1e-9));
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = plank(&["gen", "--random", "6", "3", "--seed", "11"]);
    let b = plank(&["gen", "--random", "6", "3", "--seed", "11"]);
    assert_eq!(a.stdout, b.stdout);
    let input = write(dir.path(), "r.json", std::str::from_utf8(&a.stdout).unwrap());
    let v1 = plank(&["verify", &input, "--oracle"]);
    let v2 = plank(&["verify", &input, "--oracle"]);
    assert_eq!(v1.stdout, v2.stdout);
    assert_eq!(v1.status.code(), Some(0));
}

#[test]
fn seed_is_read_from_environment() {
    let flag = plank(&["gen", "--random", "4", "2", "--seed", "5"]);
    let env = Command::new(env!("CARGO_BIN_EXE_plank"))
        .args(["gen", "--random", "4", "2"])
        .env("PLANK_SEED", "5")
        .output()
        .unwrap();
    assert_eq!(flag.stdout, env.stdout);
    let other = plank(&["gen", "--random", "4", "2", "--seed", "6"]);
    assert_ne!(flag.stdout, other.stdout);
}

#[test]
fn inv_eigen_all_on_identity_finds_every_orthant() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "g.json", r#"{"gram": [[1,0,0],[0,1,0],[0,0,1]]}"#);
    let out = plank(&["inv-eigen", &input, "--all"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    let solutions = r["solutions"].as_array().unwrap();
    assert_eq!(solutions.len(), 8);
    for s in solutions {
        for x in s["w"].as_array().unwrap() {
            assert!((x.as_f64().unwrap().abs() - 1.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn inv_eigen_single_quadrant() {
    let dir = tempfile::tempdir().unwrap();
    let out = plank(&["inv-eigen", &extremal(dir.path(), 3), "--quadrant", "++-"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    let w: Vec<f64> = r["solutions"][0]["w"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    let s = 3f64.sqrt();
    for (got, want) in w.iter().zip([1.0 / s, 2.0 / s, -2.0 / s]) {
        assert!((got - want).abs() <= 1e-9, "{w:?}");
    }
}

#[test]
fn inv_eigen_dual_rejects_singular_gram() {
    let dir = tempfile::tempdir().unwrap();
    let out = plank(&["inv-eigen", &extremal(dir.path(), 3), "--dual"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn trace_writes_header_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = plank(&["trace", &extremal(dir.path(), 4), "--slice", "2", "--samples", "16"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "theta,t,dt,d2t,q,quadform");
    assert_eq!(lines.len(), 17);
    let first: Vec<f64> = lines[1].split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(first[0], 0.0);
    assert!((first[1] - 1.0).abs() <= 1e-12);
    assert!(first[4].abs() <= 1e-12);
}

#[test]
fn zones_report_coverage() {
    let dir = tempfile::tempdir().unwrap();
    let input = extremal(dir.path(), 3);
    let body = std::fs::read_to_string(&input).unwrap();
    let v: Value = serde_json::from_str(&body).unwrap();
    let zones: Vec<Value> = v["vectors"]
        .as_array()
        .unwrap()
        .iter()
        .map(|row| {
            let r = row.as_array().unwrap();
            serde_json::json!({"normal": [r[0], r[1], 0.0], "width": std::f64::consts::FRAC_PI_3})
        })
        .collect();
    let zfile = write(dir.path(), "zones.json", &serde_json::json!({ "zones": zones }).to_string());
    let out = plank(&["zones", &zfile]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["covered"], true);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // usage errors
    assert_eq!(plank(&[]).status.code(), Some(2));
    assert_eq!(plank(&["gen"]).status.code(), Some(2));
    assert_eq!(plank(&["gen", "--extremal", "0"]).status.code(), Some(2));
    assert_eq!(plank(&["--help"]).status.code(), Some(0));
    // unreadable and malformed input
    assert_eq!(plank(&["verify", "/nonexistent/file.json"]).status.code(), Some(2));
    let bad = write(dir.path(), "bad.json", r#"{"vectors": [[1, 0], [0, "#);
    let out = plank(&["verify", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
    // non-unit rows are rejected unless normalized
    let raw = write(dir.path(), "raw.json", r#"{"vectors": [[2, 0], [0, 3]]}"#);
    let out = plank(&["verify", &raw]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--normalize"));
    assert_eq!(plank(&["verify", &raw, "--normalize"]).status.code(), Some(0));
}
