use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn inputs(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../inputs").join(name)
}

fn formflow(args: &[&str]) -> Output {
    formflow_env(args, None)
}

fn formflow_env(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_formflow"));
    cmd.args(args).env_remove("FORMFLOW_THREADS");
    if let Some(t) = threads {
        cmd.env("FORMFLOW_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout_json(out: &Output) -> Value {
    assert_eq!(code(out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write_temp(dir: &tempfile::TempDir, name: &str, body: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn first_law_is_not_identical() {
    let v = stdout_json(&formflow(&["analyze", inputs("first_law.ff").to_str().unwrap()]));
    assert_eq!(v["identical"], false);
    let e = stdout_json(&formflow(&["analyze", inputs("entropy.ff").to_str().unwrap()]));
    assert_eq!(e["identical"], true);
}

#[test]
fn torsion_breaks_identity() {
    let v = stdout_json(&formflow(&["analyze", inputs("torsion.ff").to_str().unwrap()]));
    assert_eq!(v["identical"], false);
    assert_eq!(v["maxCoefficientTerm"].as_f64(), Some(0.0));
}

#[test]
fn form_closure() {
    let v = stdout_json(&formflow(&["analyze", inputs("closed_form.ff").to_str().unwrap()]));
    assert_eq!(v["closed"], true);
}

#[test]
fn commutator_csv_has_header() {
    let out = formflow(&["analyze", inputs("first_law.ff").to_str().unwrap(), "--format", "csv"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("T,V,K[T,V]\n"), "{text}");
    assert_eq!(text.lines().count(), 401);
}

#[test]
fn characteristics_bundle_and_trajectory_file() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("traj.csv");
    let out = formflow(&[
        "characteristics",
        inputs("free_particle.ff").to_str().unwrap(),
        "--trajectory",
        csv.to_str().unwrap(),
    ]);
    let v = stdout_json(&out);
    assert!(v["closure"]["onResidual"].as_f64().unwrap() < 1e-8);
    assert!(v["closure"]["offResidual"].as_f64().unwrap() > 0.1);
    let text = std::fs::read_to_string(csv).unwrap();
    assert!(text.starts_with("a,t,x,p,u\n"));
    assert_eq!(text.lines().count(), 1 + 9 * 101);
}

#[test]
fn advection_keeps_solution_constant() {
    let v = stdout_json(&formflow(&["characteristics", inputs("advection.ff").to_str().unwrap()]));
    for (end, a) in v["endpoints"].as_array().unwrap().iter().zip(v["members"].as_array().unwrap()) {
        let a = a.as_f64().unwrap();
        assert!((end["u"].as_f64().unwrap() - a).abs() < 1e-12);
        assert!((end["x"].as_f64().unwrap() - (a + 2.0)).abs() < 1e-10);
    }
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = formflow(&["classify", "--all", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 10);
}

#[test]
fn classify_round_trip() {
    let all = stdout_json(&formflow(&["classify", "--all"]));
    for e in all.as_array().unwrap() {
        let (p, k, n) = (e["p"].to_string(), e["k"].to_string(), e["n"].to_string());
        let one = stdout_json(&formflow(&["classify", "--p", &p, "--k", &k, "--n", &n]));
        assert_eq!(one["status"], "inTable");
        assert_eq!(&one["entry"], e);
    }
    let miss = stdout_json(&formflow(&["classify", "--p", "1", "--k", "2"]));
    assert_eq!(miss["status"], "outOfTable");
    let neg = stdout_json(&formflow(&["classify", "--p", "-1", "--k", "0"]));
    assert_eq!(neg["status"], "outOfTable");
}

#[test]
fn classify_csv() {
    let out = formflow(&["classify", "--all", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 11);
    assert!(text.contains("3,3,4,gravitation,graviton,"));
}

#[test]
fn every_preset_runs() {
    for (kind, presets) in [
        ("thermo", &["ideal-gas"][..]),
        ("gas", &["uniform", "shock-tube", "subsonic-body", "boundary-layer"][..]),
        ("em", &["plane-wave", "reversed", "static", "charged"][..]),
    ] {
        for p in presets {
            for format in ["json", "csv"] {
                let out = formflow(&["scenario", "--scenario", kind, "--preset", p, "--format", format]);
                assert_eq!(code(&out), 0, "{kind}/{p}: {}", String::from_utf8_lossy(&out.stderr));
                assert!(!out.stdout.is_empty());
            }
        }
    }
}

#[test]
fn scenario_outcomes() {
    let thermo = stdout_json(&formflow(&["scenario", "--scenario", "thermo", "--preset", "ideal-gas"]));
    assert_eq!(thermo["factorFound"], "1/T");
    assert_eq!(thermo["secondLawHolds"], true);
    let em = stdout_json(&formflow(&["scenario", "--scenario", "em", "--preset", "plane-wave"]));
    assert_eq!(em["matchesC"], true);
    let gas = stdout_json(&formflow(&["scenario", "--scenario", "gas", "--preset", "uniform"]));
    assert_eq!(gas["predictedStructure"], "equilibrium, no structure");
}

#[test]
fn scenario_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_temp(&dir, "thermo.json", r#"{ "r": 2.0, "cV": 3.0 }"#);
    let v = stdout_json(&formflow(&["scenario", "--scenario", "thermo", "--config", &cfg]));
    assert!((v["gamma"].as_f64().unwrap() - 5.0 / 3.0).abs() < 1e-15);
    let bad = write_temp(&dir, "bad.json", r#"{ "colour": 1 }"#);
    assert_eq!(code(&formflow(&["scenario", "--scenario", "thermo", "--config", &bad])), 2);
}

#[test]
fn output_is_deterministic_across_thread_counts() {
    let runs = [
        vec!["analyze", "../../inputs/first_law.ff"],
        vec!["characteristics", "../../inputs/free_particle.ff"],
        vec!["scenario", "--scenario", "gas", "--preset", "subsonic-body"],
        vec!["scenario", "--scenario", "em", "--preset", "plane-wave", "--format", "csv"],
    ];
    for args in runs {
        let args: Vec<String> = args
            .iter()
            .map(|a| a.strip_prefix("../../inputs/").map_or(a.to_string(), |f| inputs(f).to_string_lossy().into_owned()))
            .collect();
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let base = formflow_env(&args, Some("1"));
        assert_eq!(code(&base), 0);
        for threads in ["0", "4"] {
            let again = formflow_env(&args, Some(threads));
            assert_eq!(base.stdout, again.stdout, "{args:?} with {threads} threads");
        }
        assert_eq!(base.stdout, formflow(&args).stdout);
    }
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let broken = inputs("broken.ff");
    let out = formflow(&["analyze", broken.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error: ") && err.contains("broken.ff:2:"), "{err}");

    let unbound = write_temp(&dir, "q.ff", "relation \"q\" on (x, y) { omega: q*dx }\n");
    let no_u = write_temp(&dir, "nou.ff", "hj on (x) { E: p^2/2; init { x: 0; p: 1 } }\n");
    let bad_step = write_temp(&dir, "step.ff", "hj on (x) { E: p^2/2; init { x: 0; p: 1; u: 0 }; step: 0 }\n");
    for args in [
        vec!["analyze", &unbound],
        vec!["analyze", "/nonexistent/input.ff"],
        vec!["characteristics", &no_u],
        vec!["characteristics", &bad_step],
        vec!["analyze", &unbound, "--tol=-1"],
        vec!["scenario", "--scenario", "gas", "--preset", "nope"],
        vec!["scenario", "--scenario", "gas"],
        vec!["classify", "--p", "1"],
        vec!["frobnicate"],
    ] {
        assert_eq!(code(&formflow(&args)), 2, "{args:?}");
    }
    assert_eq!(code(&formflow_env(&["classify", "--all"], Some("many"))), 2);
}

#[test]
fn evaluation_failures_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let nan = write_temp(&dir, "ln.ff", "form 1 on (x, y): ln(x)*y*dx\n");
    let out = formflow(&["analyze", &nan, "--grid", "x=-2:-1:5,y=0:1:5"]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}
