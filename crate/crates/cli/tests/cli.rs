use std::path::Path;
use std::process::{Command, Output};

fn tag(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tag"))
        .args(args)
        .current_dir(cwd)
        .env_remove("TAG_CONFIG")
        .output()
        .expect("spawn tag")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Value from a `name  value unit` line.
fn field(out: &str, name: &str) -> f64 {
    out.lines()
        .find_map(|l| {
            let mut it = l.split_whitespace();
            (it.next() == Some(name)).then(|| it.next().unwrap().parse().unwrap())
        })
        .unwrap_or_else(|| panic!("no `{name}` in\n{out}"))
}

#[test]
fn fk_angle_chain() {
    let dir = tempfile::tempdir().unwrap();
    let o = tag(&["fk", "--phi", "30", "--v2", "8.56"], dir.path());
    assert!(o.status.success());
    let out = stdout(&o);
    assert!((field(&out, "delta_x") - 14.83).abs() <= 0.01, "{out}");
    assert!((field(&out, "theta1") - 60.0).abs() < 1e-9);
    assert!((field(&out, "incident") - 75.0).abs() < 1e-9);

    let out = stdout(&tag(&["fk", "--phi", "10", "--v2", "8.56"], dir.path()));
    assert!((field(&out, "delta_x") - 3.12).abs() <= 0.01);

    let out = stdout(&tag(&["fk", "--stroke", "0"], dir.path()));
    assert_eq!(field(&out, "incident"), 45.0);
    assert_eq!(field(&out, "delta_x"), 0.0);
}

#[test]
fn fk_base_transform_and_revs() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("base.txt"),
        "1 0 0 10\n0 1 0 0\n0 0 1 -5\n0 0 0 1\n",
    )
    .unwrap();
    let out = stdout(&tag(
        &["fk", "--stroke", "0", "--base-transform", "base.txt"],
        dir.path(),
    ));
    let line = out.lines().find(|l| l.starts_with("spot_base")).unwrap();
    let xyz: Vec<f64> = line
        .split_whitespace()
        .skip(1)
        .take(3)
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(xyz, vec![10.0, 8.56, -5.0]);

    // one revolution of a 0.6 mm lead screw
    let out = stdout(&tag(&["fk", "--revs", "1"], dir.path()));
    assert!((field(&out, "stroke") - 0.6).abs() < 1e-9);

    std::fs::write(
        dir.path().join("skew.txt"),
        "2 0 0 0 0 1 0 0 0 0 1 0 0 0 0 1",
    )
    .unwrap();
    let o = tag(
        &["fk", "--stroke", "0", "--base-transform", "skew.txt"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn ik_examples_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = stdout(&tag(&["ik", "--dx", "0"], dir.path()));
    assert_eq!(field(&out, "stroke"), 0.0);

    let out = stdout(&tag(&["ik", "--dx", "14.83", "--v2", "8.56"], dir.path()));
    assert!((field(&out, "phi") - 30.0).abs() < 0.01);

    assert_eq!(
        tag(&["ik", "--dx", "-1"], dir.path()).status.code(),
        Some(2)
    );
    assert_eq!(
        tag(&["ik", "--dx", "1000"], dir.path()).status.code(),
        Some(3)
    );
    assert_eq!(tag(&["ik"], dir.path()).status.code(), Some(2));
    assert_eq!(
        tag(&["fk", "--phi", "50"], dir.path()).status.code(),
        Some(3)
    );
    assert_eq!(
        tag(&["fk", "--stroke", "1", "--v2", "0"], dir.path())
            .status
            .code(),
        Some(2)
    );
    let o = tag(
        &["--config", "missing.toml", "fk", "--phi", "1"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(4));
    assert!(!o.stderr.is_empty());
}

#[test]
fn config_file_env_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("m.toml"), "v2_mm = 20.0\n").unwrap();
    let from_file = stdout(&tag(
        &["--config", "m.toml", "fk", "--phi", "10"],
        dir.path(),
    ));
    assert!((field(&from_file, "delta_x") - 20.0 * 20f64.to_radians().tan()).abs() < 1e-6);

    let flag_wins = stdout(&tag(
        &["--config", "m.toml", "fk", "--phi", "10", "--v2", "8.56"],
        dir.path(),
    ));
    assert!((field(&flag_wins, "delta_x") - 3.115585).abs() < 1e-6);

    let o = Command::new(env!("CARGO_BIN_EXE_tag"))
        .args(["fk", "--phi", "10"])
        .current_dir(dir.path())
        .env("TAG_CONFIG", "m.toml")
        .output()
        .unwrap();
    assert_eq!(stdout(&o), from_file);

    std::fs::write(dir.path().join("bad.toml"), "no_such_key = 1\n").unwrap();
    assert_eq!(
        tag(&["--config", "bad.toml", "fk", "--phi", "1"], dir.path())
            .status
            .code(),
        Some(4)
    );
}

#[test]
fn sweep_writes_forty_rows_per_trial_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let o = tag(
        &["sweep", "--out-dir", "a", "--trials", "2", "--seed", "7"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    tag(
        &["sweep", "--out-dir", "a2", "--trials", "2", "--seed", "7"],
        dir.path(),
    );

    let csv = std::fs::read_to_string(dir.path().join("a/sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 80);
    assert_eq!(rows.iter().filter(|r| r.starts_with("1,")).count(), 40);
    assert_eq!(
        csv,
        std::fs::read_to_string(dir.path().join("a2/sweep.csv")).unwrap()
    );

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "sweep");
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["output_dir"], "a");
    assert_eq!(manifest["parameters"]["fulcrum_length_mm"], 2.83);
    assert!(manifest["tool_version"].is_string());

    // replaying the output reproduces the same angle columns
    let o = tag(
        &["sweep", "--replay", "a/sweep.csv", "--out-dir", "b"],
        dir.path(),
    );
    assert!(o.status.success());
    let replayed = std::fs::read_to_string(dir.path().join("b/sweep.csv")).unwrap();
    assert_eq!(replayed, csv);
}

#[test]
fn steer_replay_of_bench_means() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("m.csv"),
        "phi_deg,trial_id,measured_dx_mm\n10,1,3.14\n20,1,7.97\n30,1,13.96\n",
    )
    .unwrap();
    let o = tag(
        &["steer", "--replay", "m.csv", "--out-dir", "out"],
        dir.path(),
    );
    assert!(o.status.success());
    assert!((field(&stdout(&o), "rmse") - 0.68).abs() < 0.01);
    let summary = std::fs::read_to_string(dir.path().join("out/steering_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
    assert!(dir.path().join("out/manifest.json").exists());

    let o = tag(&["steer", "--out-dir", "sim", "--seed", "3"], dir.path());
    assert!(o.status.success());
    let rows = std::fs::read_to_string(dir.path().join("sim/steering.csv")).unwrap();
    assert_eq!(rows.lines().count(), 16);

    let o = tag(&["steer", "--angles", "10,50"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn calibrate_recovers_nominal_lever() {
    let dir = tempfile::tempdir().unwrap();
    let o = tag(
        &[
            "calibrate",
            "--out-dir",
            "c",
            "--trials",
            "2",
            "--init-l",
            "3.2",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let l = field(&stdout(&o), "l");
    assert!((l - 2.83).abs() / 2.83 < 0.01, "{l}");
    let hist = std::fs::read_to_string(dir.path().join("c/calibration.csv")).unwrap();
    assert!(hist.starts_with("iteration,l_mm,c,residual_rmse_deg\n"));
    assert!(hist.lines().count() >= 3);

    std::fs::write(
        dir.path().join("short.csv"),
        "trial_id,stroke_mm,estimated_dtheta_deg\n1,0,0\n1,0.1,2\n",
    )
    .unwrap();
    let o = tag(&["calibrate", "--input", "short.csv"], dir.path());
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn render_then_estimate() {
    let dir = tempfile::tempdir().unwrap();
    assert!(tag(
        &["render", "--phi", "20", "--out", "frames/f20.pgm"],
        dir.path()
    )
    .status
    .success());
    assert!(tag(
        &[
            "render",
            "--phi",
            "5",
            "--noise",
            "5",
            "--out",
            "frames/f05.pgm"
        ],
        dir.path()
    )
    .status
    .success());
    assert!(dir.path().join("frames/f20.pgm.manifest.json").exists());

    let o = tag(
        &["estimate-angle", "frames/f20.pgm", "--out-dir", "e1"],
        dir.path(),
    );
    assert!(o.status.success());
    let line = stdout(&o);
    let angle: f64 = line.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!((angle - 20.0).abs() <= 0.25, "{line}");

    let o = tag(
        &["estimate-angle", "frames", "--out-dir", "e2", "--edges"],
        dir.path(),
    );
    assert!(o.status.success());
    let table = std::fs::read_to_string(dir.path().join("e2/angles.csv")).unwrap();
    let names: Vec<&str> = table
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(names, ["f05.pgm", "f20.pgm"]);
    let edges = std::fs::read_to_string(dir.path().join("e2/f20_edges.csv")).unwrap();
    assert!(edges.starts_with("col,row\n"));

    assert_eq!(
        tag(&["render", "--phi", "46", "--out", "x.pgm"], dir.path())
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        tag(&["estimate-angle", "nope.pgm"], dir.path())
            .status
            .code(),
        Some(4)
    );
    std::fs::write(dir.path().join("junk.pgm"), b"P2 not binary").unwrap();
    assert_eq!(
        tag(&["estimate-angle", "junk.pgm"], dir.path())
            .status
            .code(),
        Some(4)
    );
}
