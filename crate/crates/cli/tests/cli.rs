use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use averager_cli::RunConfig;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const FIG1: &str = "eps = 0.1\n[unfolding]\na2 = 1.0\nb2 = 5.0\ndelta = 2.0\n";

fn averager(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_averager"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn classify_three_orbit_case() {
    let dir = tempfile::tempdir().unwrap();
    let out = averager(dir.path(), FIG1, &["classify", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["zero_hopf"], true);
    assert_eq!(v["prediction"]["case"], "Three");
    let roots = v["prediction"]["roots"].as_array().unwrap();
    assert_eq!(roots.len(), 3);
    assert_eq!(roots[0]["r"].as_f64().unwrap(), 4.0);
}

#[test]
fn classify_direct_params_without_zero_hopf() {
    let dir = tempfile::tempdir().unwrap();
    let out = averager(dir.path(), "[params]\na = 3.6\nb = 1.3\nc = 0.1\n", &["classify"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("no zero-Hopf equilibrium"));
}

#[test]
fn classify_degenerate_delta_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("[unfolding]\na2 = 1.0\nb2 = 5.0\ndelta = {}\n", 3f64.sqrt());
    let out = averager(dir.path(), &cfg, &["classify", "--json"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout_json(&out)["prediction"]["degenerate"], "delta^2 = 3");
}

#[test]
fn config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = averager(dir.path(), "eps = 0.1\nbogus = 2\n[unfolding]\na2 = 1.0\nb2 = 5.0\ndelta = 2.0\n", &["classify"]);
    assert_eq!(out.status.code(), Some(1));
    let out = averager(dir.path(), "[params]\na = 0.0\nb = 0.0\nc = -1.0\n", &["orbits"]);
    assert_eq!(out.status.code(), Some(1));
    let out = Command::new(env!("CARGO_BIN_EXE_averager")).arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn average_matches_oracle_with_f_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = averager(dir.path(), FIG1, &["average", "--json", "--out", "av"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["f_identically_zero"], true);
    assert!(v["max_deviation"].as_f64().unwrap() < 1e-9);
    let table = fs::read_to_string(dir.path().join("av/average.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 400);
}

#[test]
fn average_random_draws_within_1e_9() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut done = 0;
    while done < 5 {
        let delta: f64 = rng.gen_range(0.5..3.0);
        if (delta - 3f64.sqrt()).abs() < 0.05 {
            continue;
        }
        let (a2, b2, c1, c2): (f64, f64, f64, f64) =
            (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let cfg = format!("seed = 20\n[unfolding]\na2 = {a2}\nb2 = {b2}\nc1 = {c1}\nc2 = {c2}\ndelta = {delta}\n");
        let out = averager(dir.path(), &cfg, &["average", "--json"]);
        assert_eq!(out.status.code(), Some(0));
        let v = stdout_json(&out);
        for row in v["rows"].as_array().unwrap() {
            assert!(row["deviation"].as_f64().unwrap() < 1e-9);
        }
        done += 1;
    }
}

#[test]
fn orbits_three_traces() {
    let dir = tempfile::tempdir().unwrap();
    let out = averager(dir.path(), FIG1, &["orbits", "--quiet", "--out", "res"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    for i in 0..3 {
        let trace = fs::read_to_string(dir.path().join(format!("res/orbit_{i}.csv"))).unwrap();
        let mut lines = trace.lines();
        assert_eq!(lines.next(), Some("t,x,y,z"));
        assert!(lines.count() >= 512);
    }
    assert!(!dir.path().join("res/orbit_3.csv").exists());
}

#[test]
fn orbits_zero_case_writes_summary_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = averager(dir.path(), "eps = 0.05\n[unfolding]\na2 = -1.0\nb2 = 1.0\ndelta = 1.0\n", &["orbits", "--out", "z"]);
    assert_eq!(out.status.code(), Some(0));
    let mut names: Vec<String> =
        fs::read_dir(dir.path().join("z")).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["config.toml", "summary.json"]);
}

#[test]
fn orbits_with_eps_list_uses_subdirectories() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "eps_list = [0.1, 0.05]\n[unfolding]\na2 = 1.0\nb2 = 5.0\ndelta = 2.0\n";
    let out = averager(dir.path(), cfg, &["orbits", "--quiet", "--out", "res"]);
    assert_eq!(out.status.code(), Some(0));
    for eps in ["0.1", "0.05"] {
        let sub = dir.path().join("res/sweep").join(eps);
        assert!(sub.join("summary.json").exists());
        assert!(sub.join("orbit_2.csv").exists());
    }
}

#[test]
fn shooting_shortfall_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{FIG1}[shooting]\nmax_iter = 1\nshoot_tol = 1e-15\n");
    let out = averager(dir.path(), &cfg, &["orbits", "--out", "res", "--json"]);
    assert_eq!(out.status.code(), Some(4));
    let v = stdout_json(&out);
    assert!(v["runs"][0]["found"].as_u64().unwrap() < 3);
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = averager(dir.path(), FIG1, &["orbits", "--quiet", "--out", "a"]);
    let b = averager(dir.path(), FIG1, &["orbits", "--quiet", "--out", "b"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    for name in ["summary.json", "config.toml", "orbit_0.csv", "orbit_1.csv", "orbit_2.csv"] {
        assert_eq!(fs::read(dir.path().join("a").join(name)).unwrap(), fs::read(dir.path().join("b").join(name)).unwrap());
    }
}

#[test]
fn echoed_config_reparses_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "seed = 9\neps_list = [0.1, 0.05]\n[unfolding]\na2 = 1.0\nb2 = 5.0\ndelta = 2.0\nc1 = 0.3\n[integrator]\nabs_tol = 1e-10\n";
    let out = averager(dir.path(), cfg, &["classify", "--quiet", "--out", "echo"]);
    assert_eq!(out.status.code(), Some(0));
    let echoed = fs::read_to_string(dir.path().join("echo/config.toml")).unwrap();
    assert_eq!(RunConfig::from_toml(&echoed).unwrap(), RunConfig::from_toml(cfg).unwrap());
}

proptest! {
    #[test]
    fn config_round_trip(
        a2 in -1e3..1e3f64, b2 in -1e3..1e3f64, c1 in -1.0..1.0f64, delta in 1e-3..1e3f64,
        eps in prop::collection::vec(1e-6..1.0f64, 1..5), seed in 0..=i64::MAX as u64, abs_tol in 1e-15..1e-3f64,
    ) {
        let mut list = eps;
        list.sort_by(|a, b| b.total_cmp(a));
        list.dedup();
        let mut cfg = RunConfig {
            eps: None,
            eps_list: Some(list),
            seed,
            unfolding: Some(averager_core::UnfoldingParams { c1, ..averager_core::UnfoldingParams::second_order(a2, b2, 0.0, 0.0, delta) }),
            ..RunConfig::default()
        };
        cfg.integrator.abs_tol = abs_tol;
        prop_assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }
}
