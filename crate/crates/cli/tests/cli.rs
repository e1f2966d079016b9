use std::path::Path;
use std::process::{Command, Output};

fn mchb(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mchb"))
        .args(args)
        .current_dir(cwd)
        .env_remove("MCHB_OUT_DIR")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn validate_defaults_and_strict_failures() {
    let dir = tempfile::tempdir().unwrap();
    let o = mchb(&["validate"], dir.path());
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("A8 pass"));

    let cfg = dir.path().join("wide.json");
    std::fs::write(&cfg, r#"{"model": {"epsilon": 0.06}}"#).unwrap();
    let c = cfg.to_str().unwrap();
    assert_eq!(code(&mchb(&["validate", "--config", c], dir.path())), 0);
    let o = mchb(&["validate", "--config", c, "--strict"], dir.path());
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stdout).contains("A8 FAIL"));
    assert_eq!(code(&mchb(&["run", "--config", c, "--strict", "--steps", "1"], dir.path())), 4);
}

#[test]
fn configuration_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"model": {"kappa": 2.0}}"#).unwrap();
    for args in [
        vec!["validate", "--config", bad.to_str().unwrap()],
        vec!["validate", "--config", "missing.json"],
        vec!["run", "--preset", "no-such-preset"],
        vec!["frobnicate"],
        vec!["run", "--steps", "3", "--t-end", "1"],
        vec!["mms", "--grids", "16"],
    ] {
        assert_eq!(code(&mchb(&args, dir.path())), 1, "{args:?}");
    }
}

#[test]
fn run_writes_energy_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = mchb(
        &["run", "--preset", "zero-source", "--steps", "3", "--seed", "7", "--out-dir", out.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut rd = csv::Reader::from_path(out.join("energy.csv")).unwrap();
    assert_eq!(rd.headers().unwrap().get(2), Some("E"));
    let e: Vec<f64> = rd.records().map(|r| r.unwrap()[2].parse().unwrap()).collect();
    assert_eq!(e.len(), 4);
    assert!(e.windows(2).all(|w| w[1] <= w[0]));
    assert!(out.join("run_meta.json").exists());
    assert!(out.join("dumps/state_000003.bin").exists());
}

#[test]
fn output_directory_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_mchb"))
        .args(["run", "--t-end", "0"])
        .current_dir(dir.path())
        .env("MCHB_OUT_DIR", dir.path().join("env"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("env/run/energy.csv").exists());
}

#[test]
fn mms_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = mchb(&["mms", "--grids", "16,32,64", "--jobs", "2"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("mchb-out/mms/mms.csv")).unwrap();
    assert!(text.starts_with("study,n,h,error\n"));
    assert_eq!(text.lines().count(), 1 + 4 * 3);
}

#[test]
fn sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.json");
    std::fs::write(&cfg, r#"{"grid_nx": 32, "grid_ny": 32, "sweep": {"snapshot_steps": 2}}"#).unwrap();
    let o = mchb(
        &["sweep-darcy", "--config", cfg.to_str().unwrap(), "--jobs", "2", "--out-dir", "sw"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut rd = csv::Reader::from_path(dir.path().join("sw/sweep.csv")).unwrap();
    let header: Vec<String> = rd.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["eta", "velocity_gap", "relative_gap", "darcy_residual"]);
    assert_eq!(rd.records().count(), 4);
}
