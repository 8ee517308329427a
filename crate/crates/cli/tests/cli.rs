use std::path::Path;

use assert_cmd::Command;
use serde_json::Value;
use tempfile::TempDir;

const BAD_SPEC: &str = r#"{"family":"raw","g11":[[0,0,1,0]],"g12":[],"g22":[[0,0,1,0]]}"#;

fn foliate() -> Command {
    Command::cargo_bin("foliate").unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

fn field(path: &Path) -> Vec<[f64; 7]> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let headers: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(headers, ["x", "y", "u", "ux", "uy", "residual", "valid"]);
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            let mut row = [0.0; 7];
            for (o, s) in row.iter_mut().zip(rec.iter()) {
                *o = s.parse().unwrap();
            }
            row
        })
        .collect()
}

fn bad_spec(dir: &TempDir) -> std::path::PathBuf {
    let p = dir.path().join("bad.json");
    std::fs::write(&p, BAD_SPEC).unwrap();
    p
}

fn out(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).display().to_string()
}

#[test]
fn cone_flat_is_the_light_cone() {
    let d = TempDir::new().unwrap();
    foliate().args(["cone", "--metric", "flat", "--out", &out(&d, "o")]).assert().success();
    let c = json(&d.path().join("o/cone.json"));
    let s = 0.5f64.sqrt();
    assert_eq!(c["schema"], 1);
    let mut xs = [num(&c["m_minus"][0]), num(&c["m_plus"][0])];
    xs.sort_by(f64::total_cmp);
    assert!((xs[0] + s).abs() < 1e-9 && (xs[1] - s).abs() < 1e-9, "{c}");
    assert!((num(&c["m_minus"][1]) - s).abs() < 1e-9);
    assert!((num(&c["m_plus"][1]) - s).abs() < 1e-9);
    assert!(c.get("D").is_some());
}

#[test]
fn cone_sheared_stable_under_doubling() {
    let d = TempDir::new().unwrap();
    for len in ["100", "200"] {
        foliate()
            .args(["cone", "--metric", "sheared", "--length", len, "--out", &out(&d, len)])
            .assert()
            .success();
    }
    let a = json(&d.path().join("100/cone.json"));
    let b = json(&d.path().join("200/cone.json"));
    for key in ["m_minus", "m_plus"] {
        for i in 0..2 {
            assert!((num(&a[key][i]) - num(&b[key][i])).abs() < 1e-3, "{key}[{i}]");
        }
    }
}

#[test]
fn bad_spec_names_the_signature_gate() {
    let d = TempDir::new().unwrap();
    let spec = bad_spec(&d);
    for cmd in ["cone", "distance", "pole", "busemann", "foliate"] {
        let a = foliate()
            .args([cmd, "--metric", spec.to_str().unwrap(), "--out", &out(&d, "o")])
            .assert()
            .code(2);
        let err = String::from_utf8(a.get_output().stderr.clone()).unwrap();
        assert!(err.contains("signature_check"), "{cmd}: {err}");
    }
}

#[test]
fn invalid_flags_exit_two() {
    let d = TempDir::new().unwrap();
    foliate()
        .args(["cone", "--metric", "no-such-family", "--out", &out(&d, "o")])
        .assert()
        .code(2);
    foliate()
        .args(["busemann", "--metric", "flat", "--alpha", "0,1", "--k", "0,1"])
        .assert()
        .code(2);
    foliate()
        .args(["busemann", "--metric", "flat", "--res", "1.5,3", "--out", &out(&d, "o")])
        .assert()
        .code(2);
    foliate()
        .args(["cone", "--metric", "flat", "--length", "-1", "--out", &out(&d, "o")])
        .assert()
        .code(2);
}

#[test]
fn distance_flat_closed_form() {
    let d = TempDir::new().unwrap();
    foliate()
        .args(["distance", "--metric", "flat", "--x", "0,0", "--y", "1,2", "--out", &out(&d, "a")])
        .assert()
        .success();
    let r = json(&d.path().join("a/distance.json"));
    assert!((num(&r["value"]) - 3f64.sqrt()).abs() < 1e-6, "{r}");
    assert_eq!(r["status"], "timelike");
    assert!(!r["maximizer"].as_array().unwrap().is_empty());
    assert!(r.get("method_agreement").is_none());

    foliate()
        .args(["distance", "--metric", "flat", "--x", "0,0", "--y", "2,1", "--out", &out(&d, "b")])
        .assert()
        .success();
    let r = json(&d.path().join("b/distance.json"));
    assert_eq!(r["status"], "not-causally-related");
    assert_eq!(num(&r["value"]), 0.0);
}

#[test]
fn distance_cross_check_reports_agreement() {
    let d = TempDir::new().unwrap();
    foliate()
        .args([
            "distance",
            "--metric",
            "flat",
            "--x",
            "0,0",
            "--y",
            "0.3,1",
            "--cross-check",
            "--out",
            &out(&d, "o"),
        ])
        .assert()
        .success();
    let r = json(&d.path().join("o/distance.json"));
    assert!(num(&r["method_agreement"]) < 1e-4, "{r}");
}

#[test]
fn pole_flat_and_zero_horizon() {
    let d = TempDir::new().unwrap();
    foliate()
        .args(["pole", "--metric", "flat", "--horizon", "5", "--out", &out(&d, "a")])
        .assert()
        .success();
    assert_eq!(json(&d.path().join("a/pole.json"))["is_pole"], true);
    foliate()
        .args(["pole", "--metric", "sheared", "--horizon", "0", "--out", &out(&d, "b")])
        .assert()
        .success();
    let r = json(&d.path().join("b/pole.json"));
    assert_eq!(r["is_pole"], true);
    assert!(r["first_conjugate"].is_null());
}

#[test]
fn busemann_flat_vertical_is_minus_y() {
    let d = TempDir::new().unwrap();
    foliate()
        .args(["busemann", "--metric", "flat", "--alpha", "0,1", "--res", "9,9", "--out", &out(&d, "o")])
        .assert()
        .success();
    let rows = field(&d.path().join("o/field.csv"));
    assert_eq!(rows.len(), 81);
    let valid: Vec<_> = rows.iter().filter(|r| r[6] == 1.0).collect();
    assert!(!valid.is_empty());
    let c = valid[0][2] + valid[0][1];
    for r in &valid {
        assert!((r[2] + r[1] - c).abs() < 1e-4, "{r:?}");
    }
    let h = json(&d.path().join("o/history.json"));
    assert_eq!(h["converged"], true);
    assert!(!h["history"].as_array().unwrap().is_empty());
    assert!(json(&d.path().join("o/periodicity.json")).get("available").is_some());
}

#[test]
fn busemann_flat_tilted_has_constant_gradient() {
    let d = TempDir::new().unwrap();
    foliate()
        .args(["busemann", "--metric", "flat", "--alpha", "0.3,1", "--res", "9,9", "--out", &out(&d, "o")])
        .assert()
        .success();
    let rows = field(&d.path().join("o/field.csv"));
    let valid: Vec<_> = rows.iter().filter(|r| r[6] == 1.0).collect();
    // du = g V with V the unit future vector along alpha
    let n = (1.0f64 - 0.09).sqrt();
    let (ux, uy) = (0.3 / n, -1.0 / n);
    for r in &valid {
        assert!((r[3] - ux).abs() < 1e-4 && (r[4] - uy).abs() < 1e-4, "{r:?}");
    }
}

#[test]
fn busemann_sheared_residual() {
    let d = TempDir::new().unwrap();
    foliate()
        .args(["busemann", "--metric", "sheared", "--res", "17,17", "--out", &out(&d, "o")])
        .assert()
        .success();
    let rows = field(&d.path().join("o/field.csv"));
    let worst = rows.iter().filter(|r| r[6] == 1.0).map(|r| r[5]).fold(0.0, f64::max);
    assert!(worst < 1e-3, "{worst}");
}

#[test]
fn foliate_from_field_matches_inline() {
    let d = TempDir::new().unwrap();
    let base = ["--metric", "flat", "--alpha", "0,1", "--res", "9,9"];
    foliate().arg("busemann").args(base).args(["--out", &out(&d, "f")]).assert().success();
    let field_path = out(&d, "f/field.csv");
    foliate()
        .args(["foliate", "--metric", "flat", "--field", &field_path, "--leaves", "5", "--out", &out(&d, "a")])
        .assert()
        .success();
    foliate()
        .arg("foliate")
        .args(base)
        .args(["--leaves", "5", "--out", &out(&d, "b")])
        .assert()
        .success();
    let a = std::fs::read(d.path().join("a/leaves.csv")).unwrap();
    let b = std::fs::read(d.path().join("b/leaves.csv")).unwrap();
    assert_eq!(a, b);

    let mut r = csv::Reader::from_path(d.path().join("a/leaves.csv")).unwrap();
    let headers: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(headers, ["leaf_id", "t", "x", "y"]);
    for rec in r.records() {
        let rec = rec.unwrap();
        let id: usize = rec[0].parse().unwrap();
        let x: f64 = rec[2].parse().unwrap();
        // flat vertical leaves keep their seed abscissa, up to the field tolerance
        assert!((x - (id as f64 + 0.5) / 5.0).abs() < 1e-4, "{id} {x}");
    }
    let dir = json(&d.path().join("a/direction.json"));
    assert!(num(&dir["max_direction_error"]) < 1e-3);
    let disj = json(&d.path().join("a/disjointness.json"));
    assert_eq!(disj["disjoint"], true);
    assert!(num(&disj["min_separation"]) > 0.0);
}

#[test]
fn foliate_field_without_direction_is_rejected() {
    let d = TempDir::new().unwrap();
    foliate()
        .args(["busemann", "--metric", "flat", "--res", "5,5", "--out", &out(&d, "f")])
        .assert()
        .success();
    std::fs::remove_file(d.path().join("f/history.json")).unwrap();
    foliate()
        .args(["foliate", "--metric", "flat", "--field", &out(&d, "f/field.csv"), "--out", &out(&d, "o")])
        .assert()
        .code(2);
}

#[test]
fn verify_flat_passes() {
    let d = TempDir::new().unwrap();
    foliate().args(["verify", "--metric", "flat", "--out", &out(&d, "o")]).assert().success();
    let v = json(&d.path().join("o/verify.json"));
    assert_eq!(v["passed"], true);
    assert_eq!(v["gate"]["pass"], true);
    let criteria = v["criteria"].as_array().unwrap();
    assert!(!criteria.is_empty());
    assert!(criteria.iter().all(|c| c["passed"] == true));
}

#[test]
fn verify_bad_spec_fails_gate_and_still_reports() {
    let d = TempDir::new().unwrap();
    let spec = bad_spec(&d);
    foliate()
        .args(["verify", "--metric", spec.to_str().unwrap(), "--out", &out(&d, "o")])
        .assert()
        .code(2);
    let v = json(&d.path().join("o/verify.json"));
    assert_eq!(v["gate"]["pass"], false);
    assert_eq!(v["passed"], false);
}

#[test]
fn runs_are_byte_identical() {
    let d = TempDir::new().unwrap();
    for name in ["a", "b"] {
        foliate()
            .args(["foliate", "--metric", "sheared", "--res", "9,9", "--leaves", "4", "--out", &out(&d, name)])
            .assert()
            .success();
    }
    for file in ["field.csv", "leaves.csv", "history.json", "direction.json"] {
        let a = std::fs::read(d.path().join("a").join(file)).unwrap();
        let b = std::fs::read(d.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file}");
    }
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let d = TempDir::new().unwrap();
    let cfg = d.path().join("run.json");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"metric": "flat", "out": "{}", "x": [0, 0], "y": [1, 2]}}"#,
            out(&d, "from_file")
        ),
    )
    .unwrap();
    foliate().args(["distance", "--config", cfg.to_str().unwrap()]).assert().success();
    let r = json(&d.path().join("from_file/distance.json"));
    assert!((num(&r["value"]) - 3f64.sqrt()).abs() < 1e-6);

    foliate()
        .args(["distance", "--config", cfg.to_str().unwrap(), "--y", "0,2", "--out", &out(&d, "flag")])
        .assert()
        .success();
    let r = json(&d.path().join("flag/distance.json"));
    assert!((num(&r["value"]) - 2.0).abs() < 1e-6);

    std::fs::write(&cfg, r#"{"metric": "flat", "unknown_key": 1}"#).unwrap();
    foliate().args(["cone", "--config", cfg.to_str().unwrap()]).assert().code(2);
}

#[test]
fn metric_spec_file_is_accepted() {
    let d = TempDir::new().unwrap();
    let spec = d.path().join("sheared.json");
    std::fs::write(&spec, r#"{"family":"sheared","params":{"amplitude":0.2}}"#).unwrap();
    foliate()
        .args(["cone", "--metric", spec.to_str().unwrap(), "--out", &out(&d, "a")])
        .assert()
        .success();
    foliate().args(["cone", "--metric", "sheared", "--out", &out(&d, "b")]).assert().success();
    let a = json(&d.path().join("a/cone.json"));
    let b = json(&d.path().join("b/cone.json"));
    assert_eq!(a["m_plus"], b["m_plus"]);
}
