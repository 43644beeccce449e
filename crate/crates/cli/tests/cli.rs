use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn frechet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_frechet"))
        .args(args)
        .env_remove("SEED")
        .output()
        .expect("binary runs")
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_owned()
}

fn gen_pair(dir: &Path, far: bool, seed: &str) -> (String, String) {
    let (p, q) = (path(dir, "p.json"), path(dir, "q.csv"));
    let mut args = vec!["gen", "--n", "400", "--radius", "0.3", "--turn-deg", "3", "--seed", seed, "--out-p", &p, "--out-q", &q];
    if far {
        args.extend(["--far-eps", "0.2", "--delta", "1.0"]);
    }
    let out = frechet(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    (p, q)
}

#[test]
fn close_pair_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let (p, q) = gen_pair(dir.path(), false, "3");
    for algo in ["frechet1", "hausdorff", "approx"] {
        let out = frechet(&["test", "--algo", algo, "--delta", "1.0", "--epsilon", "0.2", &p, &q]);
        assert_eq!(out.status.code(), Some(0), "{algo}: {}", String::from_utf8_lossy(&out.stderr));
        let v: Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(v["answer"], "yes");
        assert!(v["queries_used"].as_u64().unwrap() > 0);
    }
}

#[test]
fn far_pair_is_rejected_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let (p, q) = gen_pair(dir.path(), true, "4");
    let out = frechet(&["test", "--algo", "frechet1", "--delta", "1.0", "--epsilon", "0.2", "--seed", "1", &p, &q]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["answer"], "no");
    assert!(v["witness"]["kind"].is_string());
}

#[test]
fn matrix_input() {
    let dir = tempfile::tempdir().unwrap();
    let m = path(dir.path(), "m.txt");
    std::fs::write(&m, "3 3\n001\n000\n100\n").unwrap();
    let out = frechet(&["test", "--algo", "frechet1", "--delta", "1", "--epsilon", "0.5", "--matrix", &m]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::write(&m, "3 3\n011\n111\n110\n").unwrap();
    let out = frechet(&["test", "--algo", "frechet1", "--delta", "1", "--epsilon", "0.5", "--matrix", &m]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn errors_exit_with_two() {
    let out = frechet(&["test", "--algo", "frechet1", "--delta", "1", "--epsilon", "0.5", "--matrix", "/nonexistent"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    let out = frechet(&["test", "--algo", "bogus", "--delta", "1", "--epsilon", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let (p, q) = gen_pair(dir.path(), false, "1");
    let out = frechet(&["test", "--algo", "hausdorff", "--delta", "1", "--epsilon", "1.5", &p, &q]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exact_dump() {
    let dir = tempfile::tempdir().unwrap();
    let (p, q) = gen_pair(dir.path(), false, "5");
    let out = frechet(&["exact", "--delta", "1.0", &p, &q]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["discrete_frechet"].as_f64().unwrap() <= 0.3);
    assert!(v["discrete_hausdorff"].as_f64().unwrap() <= v["discrete_frechet"].as_f64().unwrap());
    assert_eq!(v["min_cost_coupling"], 0);
    assert_eq!(v["barrier_columns"], 0);
    assert!(v["exact_locality"].as_f64().unwrap() >= 0.5);
}

#[test]
fn gen_is_seeded() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    gen_pair(a.path(), true, "9");
    gen_pair(b.path(), true, "9");
    for f in ["p.json", "q.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
    }
}

const CONFIG: &str = r#"{
  "algorithm": "hausdorff",
  "recipe": {"generator": {"kind": "banded", "n": 64, "width": 1}, "certify": [{"rule": "cost_zero"}]},
  "params": {"delta": 1.0, "eps": 0.25, "t": null, "eps_prime": 0.5, "alpha": 1.0, "gamma": 1.0, "k": null, "c": null},
  "trials": 8, "instances": 2, "base_seed": 11, "parallel": false, "record_wall_time": false
}"#;

#[test]
fn bench_sweep_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = path(dir.path(), "cfg.json");
    std::fs::write(&cfg, CONFIG).unwrap();
    let out = frechet(&["bench", "--config", &cfg, "--axis", "eps", "--values", "0.25,0.5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv, "axis_value,median_q,p90_q,no_rate,wilson_lb\n0.25,16,16,0,0\n0.5,8,8,0,0\n");

    let report = path(dir.path(), "r.jsonl");
    let out = frechet(&["bench", "--config", &cfg, "--report", &report]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&report).unwrap();
    let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 9);
    assert_eq!(lines[0]["seed"], 11);
    assert_eq!(lines[8]["aggregate"]["yes_rate"], 1.0);

    let out = frechet(&["bench", "--config", &cfg, "--axis", "eps", "--values", "0.5,0.25"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn seed_env_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = path(dir.path(), "cfg.json");
    std::fs::write(&cfg, CONFIG).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_frechet"))
        .args(["bench", "--config", &cfg])
        .env("SEED", "500")
        .output()
        .unwrap();
    let first: Value = serde_json::from_str(String::from_utf8(out.stdout).unwrap().lines().next().unwrap()).unwrap();
    assert_eq!(first["seed"], 500);
}

#[test]
fn verify_passes() {
    let out = frechet(&["verify", "--instances", "50"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 7);
}
