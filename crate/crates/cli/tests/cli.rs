use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data");
    root.join(name).to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grouprho"))
        .args(args)
        .output()
        .expect("spawn grouprho")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).expect("json");
    assert_eq!(v["schema"], "grouprho/1");
    v
}

#[test]
fn check_surface() {
    let v = json(&["check", &data("surface.grp")]);
    assert_eq!(v["passes"], true);
    assert_eq!(v["worst_ratio"], "1/8");
}

#[test]
fn word_problem() {
    let v = json(&["wp", "a^7", &data("z7.grp")]);
    assert_eq!(v["trivial"], true);
    let v = json(&["wp", "abAB", &data("surface.grp")]);
    assert_eq!(v["trivial"], false);
    let v = json(&["wp", "abABcdCD", &data("surface.grp")]);
    assert_eq!(v["trivial"], true);
    // Z^2 is not C'(1/6), so only enumeration is available.
    let v = json(&["wp", "abAB", &data("z2.grp"), "--budget", "50"]);
    assert_eq!(v["method"], "enumeration");
    assert_eq!(v["trivial"], true);
}

#[test]
fn rho_free_group() {
    let v = json(&["rho", &data("free2.grp"), "--n-max", "4"]);
    let iv = &v["interval"];
    assert_eq!(iv["lo"]["q"], "523/16384");
    assert_eq!(iv["lo"]["m"], 8);
    assert!(iv["hi"].is_object());
    assert_eq!(iv["witness"][1]["p2n"], "7/64");
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["rho", &data("z2.grp")]).status.code(), Some(3));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["rho", "/nonexistent.grp"]).status.code(), Some(2));
    assert_eq!(
        run(&["rho", &data("surface.grp"), "--n-max", "40"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["zd", "--dim", "3"]).status.code(), Some(2));
    assert_eq!(run(&["wp", "x", &data("free2.grp")]).status.code(), Some(2));
}

#[test]
fn output_is_deterministic() {
    let args = ["growth", &data("free2.grp"), "--n-max", "3", "--pairs", "200", "--checkpoints", "2"];
    let a = run(&args);
    let b = run(&[&args[..], &["--threads", "1"]].concat());
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["report"]["certification"], "upper certified only");
    assert_eq!(v["report"]["exact"][2]["beta"], "53");
}

#[test]
fn zd_interval() {
    let v = json(&["zd", "--dim", "5", "--width", "1e-6"]);
    let lo: f64 = v["rho_lo"].as_str().unwrap().parse().unwrap();
    let hi: f64 = v["rho_hi"].as_str().unwrap().parse().unwrap();
    assert!(lo < hi && hi - lo <= 1e-6);
    assert!(v["N"].as_u64().unwrap() <= 100_000);
}

#[test]
fn diagonal_demo() {
    let out = run(&["diagonal", "--targets", "0.5,1.5", "--steps", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stderr.is_empty());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["replayed"], true);
    assert_eq!(v["state"]["indices"].as_array().unwrap().len(), 2);
    let warn = run(&["diagonal", "--targets", "1", "--budget", "3"]);
    assert!(String::from_utf8_lossy(&warn.stderr).contains("warning"));
}

#[test]
fn decide_and_text_format() {
    let v = json(&["decide", "aA", &data("free2.grp")]);
    assert_eq!(v["decision"]["outcome"]["verdict"], "trivial");
    let out = run(&["decide", "a", &data("surface.grp"), "--budget", "6", "--format", "text"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("undecided"));
    assert!(text.contains("schema: grouprho/1"));
}

#[test]
fn lower_sequence_table() {
    let v = json(&["lower-seq", &data("free2.grp"), "--k", "4", "--every", "2"]);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1]["x_k"]["q"], "1/2");
}

#[test]
fn cr_check_small() {
    let v = json(&["cr-check", &data("surface.grp"), "--r-test", "1"]);
    assert_eq!(v["report"]["passes"], true);
    let dir = std::env::temp_dir().join(format!("grouprho-cli-{}", std::process::id()));
    let d = dir.to_string_lossy().into_owned();
    let a = json(&["cr-check", &data("surface.grp"), "--r-test", "1", "--cache-dir", &d]);
    let b = json(&["cr-check", &data("surface.grp"), "--r-test", "1", "--cache-dir", &d]);
    assert_eq!(a, b);
    assert_eq!(a["report"], v["report"]);
    let _ = std::fs::remove_dir_all(dir);
}
