use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use plasmahom::geometry::read_mesh;
use plasmahom::macrosolver::read_field_tagged;
use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_plasmahom"));
    c.env_remove("PLASMAHOM_THREADS");
    c
}

fn write_config(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_vec_pretty(v).unwrap()).unwrap();
    p
}

fn summary(o: &Output) -> Value {
    let text = String::from_utf8(o.stdout.clone()).unwrap();
    assert_eq!(text.lines().count(), 1, "one summary line expected, got {text:?}");
    serde_json::from_str(text.trim()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn sweep_config() -> Value {
    json!({
        "schema_version": 1,
        "geometry": {"kind": "ribbon", "width": 0.7},
        "material": {"drude": {"E_F_tilde": 1.0, "d_tilde": 20.72}},
        "solver": {"h": 0.1},
        "task": {"kind": "sweep", "omega": {"start": 2.0, "stop": 3.0, "points": 41}},
        "output": {"directory": "out"}
    })
}

#[test]
fn version_reports_formats() {
    let o = bin().arg("version").output().unwrap();
    assert_eq!(code(&o), 0);
    let v = summary(&o);
    assert_eq!(v["name"], "plasmahom");
    assert_eq!(v["artifact_version"], 1);
    assert_eq!(v["mesh_format"], "plasmahom-mesh 1");
}

#[test]
fn sweep_writes_stamped_artifacts_and_echoes_overrides() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "sweep.json", &sweep_config());
    let o = bin()
        .arg("run")
        .arg(&cfg)
        .args(["--set", "solver.h=0.08"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&o);
    assert_eq!(s["status"], "ok");
    assert_eq!(s["overrides"], json!(["solver.h=0.08"]));
    let hash = s["config_sha256"].as_str().unwrap();
    let out = dir.path().join("out");
    for name in ["config.json", "sweep.csv", "sweep.svg", "fit.json"] {
        let text = std::fs::read_to_string(out.join(name)).unwrap();
        if name != "config.json" {
            assert!(text.contains(hash), "{name} lacks the config hash");
        }
    }
    let effective: Value = serde_json::from_str(&std::fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(effective["solver"]["h"], json!(0.08));
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# plasmahom"));
    assert_eq!(
        lines.next().unwrap(),
        "omega_tilde,re_eps11,im_eps11,re_eps22,im_eps22,re_eps33,im_eps33,status"
    );
    assert_eq!(lines.filter(|l| l.ends_with(",ok")).count(), 41);
    let fit: Value = serde_json::from_str(&std::fs::read_to_string(out.join("fit.json")).unwrap()).unwrap();
    assert_eq!(fit["artifact"]["config_sha256"], hash);
    // the mesher rounds h down to divide the cell
    assert!(fit["mesh"]["h"].as_f64().unwrap() <= 0.08);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "sweep.json", &sweep_config());
    let read = |name: &str| std::fs::read(dir.path().join("out").join(name)).unwrap();
    let mut first = Vec::new();
    for threads in ["1", "2"] {
        let o = bin()
            .arg("run")
            .arg(&cfg)
            .env("PLASMAHOM_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0);
        assert_eq!(summary(&o)["threads"], json!(threads.parse::<usize>().unwrap()));
        let files: Vec<Vec<u8>> = ["sweep.csv", "fit.json", "sweep.svg"].iter().map(|n| read(n)).collect();
        if first.is_empty() {
            first = files;
        } else {
            assert!(first == files, "artifacts differ between runs");
        }
    }
}

#[test]
fn malformed_json_writes_nothing() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{\"schema_version\": 1, \"geometry\": ").unwrap();
    let o = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(code(&o), 2);
    assert_eq!(summary(&o)["status"], "invalid");
    assert!(!dir.path().join("out").exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn unknown_keys_are_all_listed() {
    let dir = TempDir::new().unwrap();
    let mut v = sweep_config();
    v["solver"]["mesh_size"] = json!(0.1);
    v["task"]["points"] = json!(3);
    let cfg = write_config(dir.path(), "c.json", &v);
    let o = bin()
        .arg("run")
        .arg(&cfg)
        .args(["--set", "output.colour=red"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    let paths: Vec<String> = summary(&o)["issues"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| i["path"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(paths, ["output.colour", "solver.mesh_size", "task.points"]);
    assert!(!dir.path().join("out").exists());
}

#[test]
fn validate_reports_cross_field_issues() {
    let dir = TempDir::new().unwrap();
    let ok = write_config(dir.path(), "ok.json", &sweep_config());
    let o = bin().arg("validate").arg(&ok).output().unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(summary(&o)["issues"], json!([]));

    let mut tube = sweep_config();
    tube["geometry"] = json!({"kind": "tube", "radius": 0.6});
    tube["task"]["omega"] = json!([1.0, 2.5, 2.0]);
    let bad = write_config(dir.path(), "bad.json", &tube);
    let o = bin().arg("validate").arg(&bad).output().unwrap();
    assert_eq!(code(&o), 2);
    let issues = summary(&o)["issues"].clone();
    let text = issues.to_string();
    assert!(text.contains("tube radius must lie in (0, 0.5)"), "{text}");
    assert!(text.contains("strictly increasing"), "{text}");
    assert_eq!(issues.as_array().unwrap().len(), 2);
    assert!(!dir.path().join("out").exists());
}

#[test]
fn unwritable_output_is_a_run_failure() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("blocker"), "x").unwrap();
    let mut v = sweep_config();
    v["output"]["directory"] = json!("blocker/sub");
    let cfg = write_config(dir.path(), "c.json", &v);
    let o = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(code(&o), 3);
    assert_eq!(summary(&o)["status"], "failed");
}

#[test]
fn bad_thread_count_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", &sweep_config());
    let o = bin()
        .arg("run")
        .arg(&cfg)
        .env("PLASMAHOM_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn usage_errors_exit_2() {
    let o = bin().args(["run"]).output().unwrap();
    assert_eq!(code(&o), 2);
    let o = bin().args(["frobnicate"]).output().unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn mesh_and_field_artifacts_read_back() {
    let dir = TempDir::new().unwrap();
    let mesh_cfg = json!({
        "schema_version": 1,
        "geometry": {"kind": "tube", "radius": 0.25},
        "solver": {"h": 0.1},
        "task": {"kind": "mesh"},
        "output": {"directory": "mesh"}
    });
    let o = bin()
        .arg("run")
        .arg(write_config(dir.path(), "m.json", &mesh_cfg))
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let text = std::fs::read(dir.path().join("mesh/mesh.txt")).unwrap();
    let mesh = read_mesh(&text[..]).unwrap();
    assert_eq!(json!(mesh.vertices.len()), summary(&o)["result"]["vertices"]);

    let macro_cfg = json!({
        "schema_version": 1,
        "geometry": {"kind": "planar_sheet"},
        "task": {
            "kind": "macro",
            "omega_tilde": 2.75,
            "slab_eps": [[0.001, 0.01], [1, 0], [1, 0]],
            "points_per_wavelength": 12,
            "pml_cells": 8
        },
        "output": {"directory": "macro"}
    });
    let o = bin()
        .arg("run")
        .arg(write_config(dir.path(), "f.json", &macro_cfg))
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&o);
    let bytes = std::fs::read(dir.path().join("macro/field.bin")).unwrap();
    let (field, tag) = read_field_tagged(&bytes[..]).unwrap();
    assert_eq!(field.grid.nx, 3 * 12 + 2 * 8);
    assert!(tag.unwrap().contains(s["config_sha256"].as_str().unwrap()));
    assert!(s["result"]["divergence_residual"].as_f64().unwrap() < 1e-9);
}

#[test]
fn enz_and_effperm_json() {
    let dir = TempDir::new().unwrap();
    let enz = json!({
        "schema_version": 1,
        "geometry": {"kind": "planar_sheet"},
        "material": {"drude": {"E_F_tilde": 1.0, "d_tilde": 20.72, "omega_tilde": 2.0}},
        "task": {"kind": "enz"},
        "output": {"directory": "enz"}
    });
    let o = bin()
        .arg("run")
        .arg(write_config(dir.path(), "e.json", &enz))
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("enz/enz.json")).unwrap()).unwrap();
    for key in ["xi0", "d_c", "eps_eff_ratio"] {
        assert_eq!(v[key].as_array().unwrap().len(), 2, "{key}");
    }
    assert_eq!(v["realizable"], true);
    assert_eq!(v["regime"], "sigma_dominant");
    let d_c = v["d_c"][0].as_f64().unwrap();
    assert!((d_c - 20.72).abs() < 0.01 * 20.72);

    let mut eff = enz.clone();
    eff["task"] = json!({"kind": "effperm"});
    eff["output"]["directory"] = json!("eff");
    let o = bin()
        .arg("run")
        .arg(write_config(dir.path(), "t.json", &eff))
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let t: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("eff/tensor.json")).unwrap()).unwrap();
    assert_eq!(t["provenance"], "closed_form");
    assert_eq!(t["omega_tilde"], json!(2.0));
    let re11 = t["eps_eff"][0][0][0].as_f64().unwrap();
    assert!(re11.abs() < 0.01, "{re11}");
}
