use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn fbcmc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fbcmc")).args(args).arg("--out").arg(dir).output().unwrap()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn assert_artifacts(dir: &Path) {
    let s = summary(dir);
    let listed: Vec<&str> = s["artifacts"].as_array().unwrap().iter().map(|a| a.as_str().unwrap()).collect();
    let unique: BTreeSet<&str> = listed.iter().copied().collect();
    assert_eq!(unique.len(), listed.len(), "duplicate artifact in {listed:?}");
    let mut on_disk = BTreeSet::new();
    for e in walk(dir) {
        on_disk.insert(e.strip_prefix(dir).unwrap().to_string_lossy().into_owned());
    }
    let listed: BTreeSet<String> = unique.iter().map(|s| s.to_string()).collect();
    assert_eq!(listed, on_disk);
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

#[test]
fn flat_solve_reports_area_of_the_disk() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fbcmc(tmp.path(), &["solve", "--init", "flat", "--H", "0"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(tmp.path());
    assert_eq!(s["schema"], 1);
    let d = s["dirichlet"].as_f64().unwrap();
    assert!((d - std::f64::consts::PI).abs() <= 0.02 * std::f64::consts::PI);
    assert_artifacts(tmp.path());
    let csv = std::fs::read_to_string(tmp.path().join("iterations.csv")).unwrap();
    assert!(csv.starts_with("iter,E,D,residual,step,orth_defect\n"));
}

#[test]
fn checks_pass_on_the_converged_cap() {
    let tmp = tempfile::tempdir().unwrap();
    let solved = tmp.path().join("cap");
    let o = fbcmc(&solved, &["solve", "--init", "cap", "--H", "1", "--level", "3"]);
    assert!(o.status.success());
    let map = solved.join("map.obj");
    let checked = tmp.path().join("check");
    let o = fbcmc(&checked, &["check", "--init", map.to_str().unwrap(), "--H", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let checks: Value = serde_json::from_str(&std::fs::read_to_string(checked.join("checks.json")).unwrap()).unwrap();
    for name in ["max_principle", "hopf", "quantization", "hersch", "index_comparison"] {
        assert_eq!(checks[name]["pass"], true, "{name}: {}", checks[name]);
    }
    assert_artifacts(&checked);
}

#[test]
fn curvature_above_the_barrier_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fbcmc(tmp.path(), &["solve", "--H", "2.5"]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("H < H0") || err.contains("< H0"), "{err}");
    assert!(err.contains("[config "));
}

#[test]
fn iteration_budget_exhaustion_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    // the flat disk is already critical; perturb it so one step cannot finish
    std::fs::write(&cfg, "[solver]\nmax_iters = 1\nnewton_switch_tol = 1e-12\n[init]\nperturb = 0.05\n").unwrap();
    let out = tmp.path().join("run");
    let o = fbcmc(&out, &["solve", "--init", "flat", "--H", "1", "--level", "3", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(summary(&out)["status"], "failed");
    assert_artifacts(&out);
}

#[test]
fn unknown_keys_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    std::fs::write(&cfg, "[energy]\ncurvature = 1\n").unwrap();
    let o = fbcmc(tmp.path(), &["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn checkpoints_and_continuation_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    std::fs::write(&cfg, "[solver]\ncheckpoint_every = 1\nnewton_switch_tol = 1e-3\n[init]\nperturb = 0.02\n").unwrap();
    let out = tmp.path().join("solve");
    let o = fbcmc(&out, &["solve", "--init", "cap", "--H", "1", "--level", "2", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("checkpoints/iter_000001.obj").is_file() && out.join("checkpoints/iter_000001.bnd").is_file());
    assert_artifacts(&out);

    let out = tmp.path().join("continue");
    let o = fbcmc(&out, &["continue", "--init", "cap", "--H", "1", "--level", "2"]);
    assert!(o.status.success());
    let s = summary(&out);
    let stages = s["stages"].as_array().unwrap();
    assert_eq!(stages.last().unwrap()["eps"], 0.0);
    assert_artifacts(&out);
}

#[test]
fn exported_vtk_is_listed() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fbcmc(tmp.path(), &["export", "--init", "flat", "--H", "0", "--level", "2"]);
    assert!(o.status.success());
    let vtk = std::fs::read_to_string(tmp.path().join("map.vtk")).unwrap();
    assert!(vtk.starts_with("# vtk DataFile"));
    assert_artifacts(tmp.path());
}
