use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyperdelta")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("bad json ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| v.to_string().parse().unwrap())
}

#[test]
fn orbit_ball_small_example_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let p1 = dir.path().join("a.csv");
    let p2 = dir.path().join("b.csv");
    for p in [&p1, &p2] {
        let out = run(&["orbit-ball", "--set", "z0=0,2", "--set", "radius=0.5", "--set", &format!("output={}", p.display())]);
        assert!(out.status.success());
        assert!(String::from_utf8_lossy(&out.stdout).contains("elements 2"));
    }
    let a = fs::read(&p1).unwrap();
    assert_eq!(a, fs::read(&p2).unwrap());
    let text = String::from_utf8(a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "a,b,c,d,length");
    assert_eq!(lines.len(), 3);
}

#[test]
fn nonpositive_radius_is_a_config_error() {
    let out = run(&["orbit-ball", "--set", "radius=0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("radius"));
}

#[test]
fn unknown_key_and_conflicting_couplings_are_rejected() {
    assert_eq!(run(&["relzeta", "eval", "--set", "nope=1"]).status.code(), Some(2));
    assert_eq!(run(&["relzeta", "eval", "--set", "alpha=1", "--set", "beta=1"]).status.code(), Some(2));
    assert_eq!(run(&["relzeta", "eval", "--set", "rep=sphere"]).status.code(), Some(2));
}

#[test]
fn sphere_roots_bracket() {
    let out = run(&["relzeta", "roots", "--set", "rep=sphere", "--set", "beta=-6.283185307179586", "--set", "interval=0.5,6"]);
    assert!(out.status.success());
    let v = json(&out);
    let roots = v["results"]["roots"].as_array().unwrap();
    assert_eq!(roots.len(), 1);
    let w = f(&roots[0]["axis_value"]);
    assert!(w > 3.0 && w < 3.3);
    assert_eq!(v["results"]["roots"][0]["classification"], "new-eigenvalue-zero");
}

#[test]
fn orbit_sum_eval_is_real_and_embeds_config() {
    let out = run(&["relzeta", "eval", "--set", "beta=1", "--set", "s=2", "--set", "radius=6"]);
    assert!(out.status.success());
    let v = json(&out);
    assert!(f(&v["results"]["im_residue"]) < 1e-12);
    assert_eq!(v["config"]["radius"], "6");
    assert_eq!(v["command"], "relzeta eval");
    assert!(v["version"].is_string());
    assert!(v["errors"].as_array().unwrap().is_empty());
}

#[test]
fn orbit_sum_roots_below_one_exit_domain() {
    let out = run(&["relzeta", "roots", "--set", "beta=1", "--set", "radius=4", "--set", "interval=0.8,3"]);
    assert_eq!(out.status.code(), Some(4));
    let v = json(&out);
    assert!(v["results"].is_null());
    assert!(!v["errors"].as_array().unwrap().is_empty());
}

#[test]
fn numbers_carry_seventeen_digits() {
    let out = run(&["relzeta", "eval", "--set", "rep=sphere", "--set", "beta=0.5", "--set", "s=2"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let line = text.lines().find(|l| l.contains("\"re\"")).unwrap();
    let mant = line.split(':').nth(1).unwrap().trim().trim_end_matches(',');
    let digits = mant.split('e').next().unwrap().chars().filter(|c| c.is_ascii_digit()).count();
    assert_eq!(digits, 17, "{mant}");
}

#[test]
fn spectral_data_ingestion() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("spec.csv");
    fs::write(&p, "lambda,weight\n0,1\n2,1\n5,1\n").unwrap();
    let out = run(&[
        "relzeta",
        "roots",
        "--set",
        "rep=spectral",
        "--set",
        &format!("spectral_data={}", p.display()),
        "--set",
        "alpha=0.7",
        "--set",
        "interval=-10,10",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let roots: Vec<f64> = v["results"]["roots"].as_array().unwrap().iter().map(|r| f(&r["axis_value"])).collect();
    assert_eq!(roots.iter().filter(|&&r| r > 0.0 && r < 2.0).count(), 1);
    assert_eq!(roots.iter().filter(|&&r| r > 2.0 && r < 5.0).count(), 1);
}

#[test]
fn trace_sphere_sides_agree() {
    let out = run(&["trace", "sphere", "--set", "beta=1.8849555921538759", "--set", "a=2"]);
    assert!(out.status.success());
    let v = json(&out);
    assert!(f(&v["results"]["difference"]) <= 1e-6);
    assert!(v["results"]["report"]["cross_check"]["residual"].is_number());
}

#[test]
fn trace_geometric_within_error() {
    let out = run(&["trace", "geometric", "--set", "beta=0.2", "--set", "radius=8", "--set", "k_max=12"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["results"]["within_error"], true);
    assert!(f(&v["results"]["report"]["params"]["q_hat"]) < 1.0);
}

#[test]
fn trace_zeta_identity_within_envelope() {
    let out = run(&["trace", "zeta-identity", "--set", "beta=0.2", "--set", "s=3", "--set", "k_max=6"]);
    assert!(out.status.success());
    assert_eq!(json(&out)["results"]["within_envelope"], true);
}

#[test]
fn eisenstein_check_and_pole() {
    let out = run(&["eisenstein", "check", "--set", "s=2.3"]);
    assert!(out.status.success());
    let v = json(&out);
    assert!(f(&v["results"]["relative_error"]) <= 1e-6);
    assert!(f(&v["results"]["involution_residual"]) <= 1e-9);
    let out = run(&["eisenstein", "eval", "--set", "s=1"]);
    assert_eq!(out.status.code(), Some(6));
    assert!(String::from_utf8_lossy(&out.stderr).contains("pole at s = 1"));
}

#[test]
fn eisenstein_perturbed_fields() {
    let out = run(&["eisenstein", "perturbed", "--set", "alpha=-0.5", "--set", "s=2.3", "--set", "radius=6"]);
    assert!(out.status.success());
    let r = &json(&out)["results"];
    for k in ["phi_alpha", "theta", "involution_residual", "cusp_extraction"] {
        assert!(!r[k].is_null(), "{k}");
    }
    assert!(f(&r["involution_residual"]) < 1e-8);
}

#[test]
fn config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# sphere run\nrep = sphere\nbeta = 2.0  # coupling\ns = 3\n").unwrap();
    let out = run(&["relzeta", "eval", "--config", cfg.to_str().unwrap(), "--set", "s=4"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["config"]["s"], "4");
    assert_eq!(v["config"]["beta"], "2.0");
    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "rep sphere\n").unwrap();
    let out = run(&["relzeta", "eval", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_lists_keys() {
    let out = run(&["--help"]);
    let text = String::from_utf8_lossy(&out.stdout);
    for k in ["radius", "spectral_data", "k_max", "Exit codes"] {
        assert!(text.contains(k), "{k}");
    }
}
