use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn spinchain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinchain"))
        .args(args)
        .env_remove("SPINCHAIN_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn path(dir: &Path) -> &str {
    dir.to_str().unwrap()
}

#[test]
fn free_evolve_reports_the_free_peak() {
    let tmp = tempfile::tempdir().unwrap();
    let out = spinchain(&["free-evolve", "--n", "10", "--alpha", "auto", "--out", path(tmp.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(tmp.path());
    let p = m["results"]["p_peak"].as_f64().unwrap();
    let t = m["results"]["t_peak"].as_f64().unwrap();
    assert!((p - 0.976).abs() < 0.01 && (t - 7.0).abs() < 1.0, "{p} {t}");
    assert_eq!(m["config"]["alpha"].as_f64(), Some(0.73));
    let csv = std::fs::read_to_string(tmp.path().join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,P_target,norm_error\n"));
}

#[test]
fn two_site_constant_pulse_transfers() {
    let tmp = tempfile::tempdir().unwrap();
    let out = spinchain(&[
        "optimize",
        "--n",
        "2",
        "--t",
        "1.5707963",
        "--actuators",
        "left",
        "--alpha",
        "0",
        "--guess",
        "constant:1",
        "--alpha-l",
        "0.001",
        "--out",
        path(tmp.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(tmp.path());
    assert!(m["results"]["yield"].as_f64().unwrap() >= 1.0 - 1e-4);
    let pulses = std::fs::read_to_string(tmp.path().join("pulses.csv")).unwrap();
    assert!(pulses.starts_with("t,F,G\n"));
    assert!(tmp.path().join("convergence.csv").exists());
}

#[test]
fn manifest_reproduces_outputs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = spinchain(&[
        "disorder-sweep",
        "--n",
        "6",
        "--t",
        "n",
        "--amplitudes",
        "0,0.1,0.3",
        "--realizations",
        "40",
        "--seed",
        "9",
        "--out",
        path(a.path()),
    ]);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let manifest_path = a.path().join("manifest.json");
    let second = spinchain(&[
        "disorder-sweep",
        "--threads",
        "2",
        "--config",
        manifest_path.to_str().unwrap(),
        "--out",
        path(b.path()),
    ]);
    assert!(second.status.success(), "{}", String::from_utf8_lossy(&second.stderr));
    for file in ["disorder.csv", "pulses.csv"] {
        assert_eq!(
            std::fs::read(a.path().join(file)).unwrap(),
            std::fs::read(b.path().join(file)).unwrap(),
            "{file}"
        );
    }
    let (ma, mb) = (manifest(a.path()), manifest(b.path()));
    assert_eq!(ma["config_hash"], mb["config_hash"]);
    assert_eq!(ma["results"], mb["results"]);
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.conf");
    std::fs::write(&cfg, "n = 6\nalpha = 0.5\nt_max = 20.0\n").unwrap();
    let out_dir = tmp.path().join("out");
    let out = spinchain(&[
        "free-evolve",
        "--config",
        cfg.to_str().unwrap(),
        "--n",
        "8",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&out_dir);
    assert_eq!(m["config"]["n"].as_u64(), Some(8));
    assert_eq!(m["config"]["alpha"].as_f64(), Some(0.5));
    assert_eq!(m["resolved"]["peak_window"].as_f64(), Some(20.0));
}

#[test]
fn output_root_comes_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_spinchain"))
        .args(["free-evolve", "--n", "5"])
        .env("SPINCHAIN_OUTPUT_DIR", tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let runs: Vec<_> = std::fs::read_dir(tmp.path()).unwrap().collect();
    assert_eq!(runs.len(), 1);
    let dir = runs[0].as_ref().unwrap().path();
    assert!(dir.file_name().unwrap().to_str().unwrap().starts_with("free-evolve-"));
    assert!(dir.join("manifest.json").exists());
}

#[test]
fn config_errors_exit_with_one_and_name_the_field() {
    let out = spinchain(&["optimize", "--n", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`n`"));

    let out = spinchain(&["optimize", "--alpha", "best"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`alpha`"));

    let out = spinchain(&["optimize", "--guess", "sawtooth:1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`guess`"));

    let out = spinchain(&["optimize", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn numerical_failure_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = spinchain(&["optimize", "--n", "4", "--guess", "constant:1e200", "--out", path(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn non_convergence_still_succeeds() {
    let tmp = tempfile::tempdir().unwrap();
    let out = spinchain(&["optimize", "--n", "6", "--max-iters", "2", "--out", path(tmp.path())]);
    assert!(out.status.success());
    assert_eq!(manifest(tmp.path())["results"]["converged"], Value::Bool(false));
}

#[test]
fn validate_warns_below_speed_limit_and_for_coarse_steps() {
    let out = spinchain(&["validate", "--n", "10", "--t", "4"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success());
    assert!(text.contains("below 0.5N"), "{text}");

    let out = spinchain(&["validate", "--dt", "0.02"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("exceeds 0.01"));

    let out = spinchain(&["validate"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(!text.contains("warning"), "{text}");
    assert!(text.contains("ok"));
}

#[test]
fn sweep_tables_have_axis_headers() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path().join("t");
    let out = spinchain(&["time-sweep", "--n", "6", "--t-over-n", "0.5,1.0", "--out", t.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(t.join("sweep.csv")).unwrap();
    assert!(csv.starts_with("T,T_over_N,yield,"));
    assert_eq!(csv.lines().count(), 3);

    let a = tmp.path().join("a");
    let out = spinchain(&[
        "alpha-sweep",
        "--n",
        "8",
        "--alphas",
        "0.3,0.6,0.9",
        "--amplitudes",
        "0.1",
        "--realizations",
        "20",
        "--out",
        a.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(a.join("sweep.csv")).unwrap();
    assert!(csv.starts_with("alpha,T,clean_yield,"));

    let l = tmp.path().join("l");
    let out = spinchain(&[
        "length-scaling",
        "--actuators",
        "both",
        "--lengths",
        "4,6",
        "--amplitudes",
        "0.1",
        "--realizations",
        "20",
        "--out",
        l.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(l.join("sweep.csv")).unwrap();
    assert!(csv.starts_with("N,alpha,T_peak,"));
    assert!(manifest(&l)["results"]["peak_time_fit"]["slope"].is_number());
}
