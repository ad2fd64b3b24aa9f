use std::path::Path;
use std::process::{Command, Output};

const GROUND: &str = r#"{
    "state": {"type": "gaussian", "x0": 0.0, "p0": 0.0, "width": 0.7071067811865476, "chirp": 0.0},
    "grid": {"x_min": -12.0, "x_max": 12.0, "n_points": 512},
    "system": {"kind": "free"},
    "time": {"t0": 0.0, "t1": 10.0, "samples": 101},
    "n_list": [2, 4, 8],
    "poly": [[1, 1, 0, 1]],
    "evolve": {"t": 1.0, "n_steps": 50}
}"#;

fn qclt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qclt"))
        .args(args)
        .env_remove("QCLT_THREADS")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn every_subcommand_succeeds_on_a_full_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", GROUND);
    for cmd in ["moments", "converge", "expect", "entropy", "evolve", "dist"] {
        let out = qclt(&[cmd, "--config", &cfg]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{cmd}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(!out.stdout.is_empty(), "{cmd}");
    }
}

#[test]
fn malformed_config_exits_2_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.json",
        &GROUND.replace("\"n_points\": 512", "\"n_points\": -3"),
    );
    let out = qclt(&["moments", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid.n_points"));

    let cfg = write(dir.path(), "syntax.json", "{\"state\": ");
    assert_eq!(qclt(&["moments", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let short = write(
        dir.path(),
        "short.json",
        &GROUND.replace("[2, 4, 8]", "[2]"),
    );
    assert_eq!(
        qclt(&["converge", "--config", &short]).status.code(),
        Some(2)
    );

    let no_system = write(
        dir.path(),
        "nosys.json",
        &GROUND.replace("\"system\": {\"kind\": \"free\"},", ""),
    );
    let out = qclt(&["entropy", "--config", &no_system]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("system"));

    assert_eq!(qclt(&["nonsense"]).status.code(), Some(2));
    assert_eq!(qclt(&["moments"]).status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_1_without_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    // the packet spreads past the grid edge long before t = 50
    let cfg = write(
        dir.path(),
        "leak.json",
        &GROUND.replace("\"t\": 1.0", "\"t\": 50.0"),
    );
    let target = dir.path().join("report.json");
    let out = qclt(&[
        "evolve",
        "--config",
        &cfg,
        "--out",
        target.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(!target.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn out_flag_writes_csv_with_exact_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", GROUND);
    let target = dir.path().join("entropy.csv");
    let out = qclt(&[
        "entropy",
        "--config",
        &cfg,
        "--out",
        target.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&target).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,sigma_x2,sigma_p2,cov_c,dent"));
    let row: Vec<&str> = lines.nth(20).unwrap().split(',').collect();
    assert_eq!(row[0], "2.0000000000000000e0");
    let dent: f64 = row[4].parse().unwrap();
    assert!((dent - 0.804719).abs() < 1e-6);
}

#[test]
fn env_threads_override_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", GROUND);
    let bad_env = Command::new(env!("CARGO_BIN_EXE_qclt"))
        .args(["moments", "--config", &cfg, "--threads", "2"])
        .env("QCLT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad_env.status.code(), Some(2));
    let a = qclt(&["converge", "--config", &cfg, "--threads", "1"]);
    let b = Command::new(env!("CARGO_BIN_EXE_qclt"))
        .args(["converge", "--config", &cfg, "--threads", "1"])
        .env("QCLT_THREADS", "4")
        .output()
        .unwrap();
    assert_eq!(a.stdout, b.stdout);
}
