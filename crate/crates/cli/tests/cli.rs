use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

use mcflab::geom::shapes;
use mcflab::io;

fn mcflab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcflab")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Every listed output exists and matches its checksum.
fn check_manifest(dir: &Path) -> serde_json::Value {
    let m = json(&dir.join("manifest.json"));
    for rec in m["outputs"].as_array().unwrap() {
        let bytes = fs::read(dir.join(rec["path"].as_str().unwrap())).unwrap();
        assert_eq!(hex::encode(Sha256::digest(&bytes)), rec["sha256"].as_str().unwrap());
        assert_eq!(bytes.len() as u64, rec["bytes"].as_u64().unwrap());
    }
    m
}

#[test]
fn flow_from_config_file_reports_extinction() {
    let dir = tempfile::tempdir().unwrap();
    let curve = io::write_curve_json(&shapes::circle(1.0, 64, 2)).unwrap();
    fs::write(dir.path().join("circle.json"), curve).unwrap();
    fs::write(dir.path().join("flow.cfg"), "geometry = circle.json\nhorizon = 0.49\nsnapshot_interval = 0.002\n").unwrap();
    let out = dir.path().join("out");
    let res = mcflab(&["flow", "--config", dir.path().join("flow.cfg").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));

    let m = check_manifest(&out);
    assert_eq!(m["command"], "flow");
    assert_eq!(m["inputs"].as_array().unwrap().len(), 2);
    let sing = json(&out.join("singularity.json"));
    assert_eq!(sing["detected"], true);
    let t_hat = sing["estimate"]["t_hat"].as_f64().unwrap();
    assert!((t_hat - 0.5).abs() < 5e-3, "T^ = {t_hat}");

    let tr = io::read_trajectory_jsonl(&fs::read_to_string(out.join("trajectory.jsonl")).unwrap()).unwrap();
    assert!((tr.last().t - 0.49).abs() < 1e-12);
    let csv = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), tr.len() + 1);
}

#[test]
fn identical_inputs_give_identical_outputs() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let res = mcflab(&[
            "flow", "--out", d.path().to_str().unwrap(), "--set", "shape=sphere", "--set", "level=2", "--set", "radius=1",
            "--set", "horizon=0.2", "--format", "obj",
        ]);
        assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    }
    for name in ["trajectory.jsonl", "summary.csv", "singularity.json", "final.obj"] {
        let a = fs::read(dirs[0].path().join(name)).unwrap();
        let b = fs::read(dirs[1].path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
    }
    let m = io::read_obj(&fs::read_to_string(dirs[0].path().join("final.obj")).unwrap()).unwrap();
    assert_eq!(m.vertex_count(), 162);
}

#[test]
fn malformed_obj_is_an_input_error_with_a_line_number() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.obj"), "v 0 0 0\nv 1 0 0\nv 0 1 zero\nf 1 2 3\n").unwrap();
    let res = mcflab(&[
        "gb-check", "--out", dir.path().join("out").to_str().unwrap(), "--set",
        &format!("geometry={}", dir.path().join("bad.obj").display()),
    ]);
    assert_eq!(code(&res), 2);
    assert!(String::from_utf8_lossy(&res.stderr).contains("line 3"), "{}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn unknown_keys_and_flags_are_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(code(&mcflab(&["shrinker", "--out", out, "--set", "family=circle", "--set", "colour=red"])), 2);
    assert_eq!(code(&mcflab(&["shrinker", "--out", out, "--set", "family=circle", "--format", "ply"])), 2);
    assert_eq!(code(&mcflab(&["shrinker", "--out", out, "--set", "family=abresch-langer", "--set", "p=2", "--set", "q=4"])), 2);
    assert_eq!(code(&mcflab(&["flow", "--out", out, "--set", "shape=circle"])), 2);
}

#[test]
fn shrinker_writes_geometry_and_residual() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = mcflab(&["shrinker", "--out", out, "--format", "obj", "--set", "family=sphere", "--set", "level=3"]);
    assert_eq!(code(&res), 0);
    check_manifest(dir.path());
    let m = io::read_obj(&fs::read_to_string(dir.path().join("shrinker.obj")).unwrap()).unwrap();
    assert!(m.vertices().iter().all(|v| (v.norm() - 2.0).abs() < 1e-12));
    let r = json(&dir.path().join("residual.json"));
    assert!(r["residual"]["l2"].as_f64().unwrap() < 2e-2);

    let res = mcflab(&["shrinker", "--out", out, "--set", "family=abresch-langer", "--set", "p=2", "--set", "q=3"]);
    assert_eq!(code(&res), 0);
    let r = json(&dir.path().join("residual.json"));
    assert!(r["closure_gap"].as_f64().unwrap() < 1e-8);

    let res = mcflab(&["shrinker", "--out", out, "--set", "family=circle", "--set", "tolerance=1e-12"]);
    assert_eq!(code(&res), 1);
    assert_eq!(json(&dir.path().join("manifest.json"))["status"], "violation");
}

#[test]
fn gauss_bonnet_verdict_sets_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let sphere = ["--set", "shape=sphere", "--set", "level=4"];
    let mut args = vec!["gb-check", "--out", out];
    args.extend(sphere);
    assert_eq!(code(&mcflab(&args)), 0);
    args.extend(["--set", "tolerance=1e-4"]);
    assert_eq!(code(&mcflab(&args)), 1);

    let res = mcflab(&["gb-check", "--out", out, "--set", "shape=plane", "--set", "cells=24", "--set", "outer=2"]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let reports = json(&dir.path().join("gb.json"));
    assert_eq!(reports.as_array().unwrap().len(), 2);
    assert_eq!(reports[1]["terms"]["c_prime"], 1.0);
}

#[test]
fn lemma5_test_is_seeded() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for (d, seed) in dirs.iter().zip(["5", "5", "6"]) {
        let res = mcflab(&["lemma5-test", "--out", d.path().to_str().unwrap(), "--seed", seed, "--set", "count=200"]);
        assert_eq!(code(&res), 0);
    }
    let read = |i: usize| fs::read(dirs[i].path().join("lemma5.csv")).unwrap();
    assert_eq!(read(0), read(1));
    assert_ne!(read(0), read(2));
}

#[test]
fn trajectory_consumers_accept_a_written_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let flow_out = dir.path().join("flow");
    let res = mcflab(&[
        "flow", "--out", flow_out.to_str().unwrap(), "--set", "shape=circle", "--set", "vertices=64", "--set", "horizon=0.49",
        "--set", "snapshot_interval=0.002",
    ]);
    assert_eq!(code(&res), 0);
    let traj = format!("trajectory={}", flow_out.join("trajectory.jsonl").display());

    let mono = dir.path().join("mono");
    let res = mcflab(&["monotonicity", "--out", mono.to_str().unwrap(), "--set", &traj]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    assert!(fs::read_to_string(mono.join("density.csv")).unwrap().starts_with("t,value,dissipation"));

    let resc = dir.path().join("rescale");
    let res = mcflab(&[
        "rescale", "--out", resc.to_str().unwrap(), "--set", &traj, "--set", "center=0,0", "--set", "t_sing=0.5", "--set",
        "lambdas=0.5,0.25",
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let rows = json(&resc.join("blowup.json"));
    assert_eq!(rows.as_array().unwrap().len(), 2);
    assert!(rows[0]["residual_l2"].as_f64().unwrap() < 1e-2);
    let scaled = io::read_trajectory_jsonl(&fs::read_to_string(resc.join("rescaled_1.jsonl")).unwrap()).unwrap();
    assert!((scaled.first().t + 0.5 / 0.0625).abs() < 1e-9);
    check_manifest(&resc);
}

#[test]
fn estimates_and_scan_run_on_configured_flows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = mcflab(&[
        "estimate", "--out", out, "--set", "kind=global-budget", "--set", "shape=sphere", "--set", "level=3", "--set",
        "radius=2", "--set", "horizon=0.5", "--set", "snapshot_interval=0.05",
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let rep = json(&dir.path().join("estimate.json"));
    assert!(rep[0]["slack"].as_f64().unwrap() > 0.0);

    let res = mcflab(&[
        "scan", "--out", out, "--set", "shape=sine-graph", "--set", "amplitude=0.01", "--set", "cells=32", "--set",
        "horizon=1", "--set", "snapshot_interval=0.05",
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let scan = json(&dir.path().join("scan.json"));
    assert!(scan["sup_quantity"].as_f64().unwrap() > 0.0);
    assert!(scan["lambda"].as_f64().unwrap().is_finite());
}
