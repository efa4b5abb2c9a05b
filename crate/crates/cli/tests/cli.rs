use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn acton(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_acton"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn missing_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = acton(
        &["binary", "--config", "/definitely/not/here.json"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("cannot read"));
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"profile":{"a0":1.0,"l_t":1.0,"ell":0.0,"e0":0.0},"r_min":1.0,"r_max":2.0,"n_r":3,"t":0.0,"colour":"red"}"#,
    )
    .unwrap();
    let o = acton(&["profile", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("colour"));
}

#[test]
fn unknown_tolerance_names_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = acton(&["trajectory", "--tol", "stiffness=1e-3"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = acton(&["reproduce", "--tol", "c1.nothing=0.1"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn invalid_physics_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"profile":{"a0":-1.0,"l_t":1.0,"ell":0.0,"e0":0.0},"r_min":1.0,"r_max":2.0,"n_r":3,"t":0.0}"#,
    )
    .unwrap();
    let o = acton(&["profile", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn preset_is_announced() {
    let dir = tempfile::tempdir().unwrap();
    let o = acton(&["rotation"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("preset"));
    let csv = fs::read_to_string(dir.path().join("rotation.csv")).unwrap();
    assert!(csv.starts_with("r_kpc,"));
    assert!(dir.path().join("rotation.svg").exists());
}

#[test]
fn same_config_same_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = a.path().join("traj.json");
    fs::write(
        &cfg,
        r#"{
            "field": {"kind": "exponential", "hbar0": 1.0, "k": [1.0, 0.0, 0.0]},
            "potential": {"kind": "harmonic", "omega": 0.7},
            "mass": 1.0,
            "position": [0.3, 0.1, 0.0],
            "velocity": [0.0, 0.4, 0.0],
            "duration": 20.0,
            "sample_dt": 0.1
        }"#,
    )
    .unwrap();
    for dir in [a.path(), b.path()] {
        let o = acton(
            &[
                "trajectory",
                "--config",
                cfg.to_str().unwrap(),
                "--seed",
                "7",
            ],
            dir,
        );
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let x = fs::read(a.path().join("trajectory.csv")).unwrap();
    let y = fs::read(b.path().join("trajectory.csv")).unwrap();
    assert!(x.len() > 1000);
    assert_eq!(x, y);
}

#[test]
fn calibration_output_feeds_a_profile_run() {
    let dir = tempfile::tempdir().unwrap();
    assert!(acton(&["calibrate"], dir.path()).status.success());
    assert!(dir.path().join("calibration.json").exists());
    let profile = fs::read_to_string(dir.path().join("profile.json")).unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        format!(r#"{{"profile":{profile},"r_min":1e9,"r_max":1e12,"n_r":10,"t":0.0}}"#),
    )
    .unwrap();
    let o = acton(&["profile", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("profile.csv")).unwrap();
    assert_eq!(csv.lines().count(), 11);
    assert!(csv.starts_with("r_m,hbar_Js,"));
}

#[test]
fn newtonian_binary_plot_is_annotated_with_the_period() {
    let dir = tempfile::tempdir().unwrap();
    let o = acton(&["binary", "--ell", "0"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let svg = fs::read_to_string(dir.path().join("binary.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("<polyline").count(), 2);
    let at = svg.find("P = ").expect("period note");
    let hours: f64 = svg[at + 4..]
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!((hours - 8.07).abs() < 0.02, "P = {hours} h");
    assert!(svg.contains("[1e9 m]"));
    let csv = fs::read_to_string(dir.path().join("binary.csv")).unwrap();
    assert!(csv.starts_with("t_s,x1_m,y1_m,x2_m,y2_m,"));
}

#[test]
fn reproduce_reports_every_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let o = acton(&["reproduce-paper", "--seed", "11"], dir.path());
    let table = String::from_utf8_lossy(&o.stdout);
    for id in 1..=9 {
        assert!(
            table.contains(&format!("] {id}. ")),
            "criterion {id} missing:\n{table}"
        );
    }
    let failed = table.contains("[FAIL]");
    assert_eq!(o.status.code(), Some(if failed { 1 } else { 0 }));
    let csv = fs::read_to_string(dir.path().join("reproduce.csv")).unwrap();
    assert!(csv.lines().count() > 30);
}

#[test]
fn seeded_reproduce_table_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        acton(&["reproduce", "--seed", "42"], dir);
    }
    let x = fs::read(a.path().join("reproduce.csv")).unwrap();
    let y = fs::read(b.path().join("reproduce.csv")).unwrap();
    assert_eq!(x, y);
}
