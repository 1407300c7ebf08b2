use std::fs;
use std::path::Path;
use std::process::Command;

fn slip(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_slip")).args(args).output().expect("binary runs")
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("config.json");
    let cfg = r#"{
        "grid": {"n_s": 101, "n_alpha": 61},
        "learner": {"max_episodes": 60, "max_steps_per_episode": 50},
        "landscape": {"count": 5, "n_rollouts": 5},
        "experiment": {"n_policy_inits": 2, "n_repeats_single": 2, "filter_rollouts": 10}
    }"#;
    fs::write(&path, cfg).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn trajectory_writes_header_and_samples() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t");
    let o = slip(&["--out", out.to_str().unwrap(), "trajectory", "--s-bar", "0.8", "--alpha-deg", "20"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,x,y,vx,vy,phase,x_f\n"));
    assert!(csv.lines().count() > 10);
    assert!(csv.contains(",stance,"));
    assert!(out.join("manifest.json").exists());
}

#[test]
fn out_of_range_state_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = slip(&["--out", dir.path().to_str().unwrap(), "trajectory", "--s-bar", "1.5", "--alpha-deg", "3"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("s_bar"));
}

#[test]
fn invalid_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"learner": {"gamma": 1.5}}"#).unwrap();
    let o = slip(&["--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "kernel"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("gamma"));
}

#[test]
fn transition_map_and_kernel_on_coarse_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("m");
    let o = slip(&["--config", &cfg, "--out", out.to_str().unwrap(), "transition-map"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("transition_map.csv")).unwrap();
    assert!(csv.starts_with("s_bar,alpha_deg,outcome_code,s_bar_next\n"));
    assert_eq!(csv.lines().count(), 1 + 101 * 61);

    let o = slip(&["--config", &cfg, "--out", out.to_str().unwrap(), "kernel"]);
    assert!(o.status.success());
    let k: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("kernel.json")).unwrap()).unwrap();
    let s_low = k["s_low"].as_f64().unwrap();
    assert!((s_low - 0.675).abs() < 0.02, "{s_low}");
}

#[test]
fn landscape_summary_lists_sgs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("l");
    let o = slip(&["--config", &cfg, "--out", out.to_str().unwrap(), "landscape", "--strategy", "feasible"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("landscape.csv")).unwrap();
    assert!(csv.starts_with("theta0,theta1,mean_steps,capped,u,v\n"));
    assert_eq!(csv.lines().count(), 26);
    let s: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("landscape.json")).unwrap()).unwrap();
    assert_eq!(s["strategy"]["kind"], "feasible");
    assert_eq!(s["sgs"].as_array().unwrap().len(), 3);
}

#[test]
fn learn_writes_curve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("learn");
    let o = slip(&["--config", &cfg, "--out", out.to_str().unwrap(), "learn", "--strategy", "viable", "--theta1-deg", "-5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("learning_curve.csv")).unwrap();
    assert_eq!(csv.lines().count(), 61);
}

#[test]
fn single_experiment_is_reproducible_and_seed_sensitive() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let o = slip(&["--config", &cfg, "--seed", seed, "--threads", "2", "--out", out.to_str().unwrap(), "experiment", "--mode", "single"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let a = run("a", "7");
    let b = run("b", "7");
    let c = run("c", "8");
    let records = |p: &Path| fs::read(p.join("records.csv")).unwrap();
    assert_eq!(records(&a), records(&b));
    assert_ne!(records(&a), records(&c));
    for f in ["manifest.json", "summary.json", "pairs.csv", "inits.csv", "kernel.json"] {
        assert!(a.join(f).exists(), "{f}");
    }
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["master_seed"], 7);
    assert_eq!(m["config"]["experiment"]["n_repeats_single"], 2);
    // 2 repeats x 2 strategies
    assert_eq!(String::from_utf8(records(&a)).unwrap().lines().count(), 5);
}
