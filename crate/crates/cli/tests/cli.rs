use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qadvect(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qadvect"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_owned()
}

#[test]
fn pmin_sweep_contains_switch_landmark() {
    let dir = tempfile::tempdir().unwrap();
    let out = qadvect(&["pmin", "--out", &out_arg(dir.path()), "--check"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let ridge = fs::read_to_string(dir.path().join("pmin_switch.csv")).unwrap();
    let row = ridge
        .lines()
        .skip(1)
        .map(|l| {
            l.split(',')
                .map(|c| c.parse::<f64>().unwrap())
                .collect::<Vec<_>>()
        })
        .find(|c| c[0] == 0.1)
        .unwrap();
    assert!((row[2] - 0.999985).abs() < 1e-6);
    let grid = fs::read_to_string(dir.path().join("pmin.csv")).unwrap();
    assert!(grid.starts_with("r,theta,value\n"));
    assert_eq!(grid.lines().count(), 1 + 100 * 100);
}

#[test]
fn heat_sweep_marks_poles() {
    let dir = tempfile::tempdir().unwrap();
    let out = qadvect(&["heat-bounds", "--out", &out_arg(dir.path()), "--check"]);
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("heat_bounds.csv")).unwrap();
    assert!(csv.starts_with("r_h,theta,value\n"));
    let poles: Vec<&str> = csv.lines().filter(|l| l.ends_with(",inf")).collect();
    assert_eq!(poles.len(), 200);
    assert!(poles
        .iter()
        .all(|l| l.starts_with("0.25,") || l.starts_with("0.5,")));
}

#[test]
fn bounds_sweep_values_and_linearity_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = qadvect(&["bounds", "--out", &out_arg(dir.path())]);
    assert!(out.status.success());
    let summary = json(&dir.path().join("summary.json"));
    assert!((summary["bound_r0.1_right_angle"].as_f64().unwrap() - 0.0251).abs() < 1e-3);
    let csv = fs::read_to_string(dir.path().join("bounds.csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    for row in rows.iter().step_by(997) {
        let expected = qadvect::analysis::advection_error_bound(row[0], row[1]);
        assert_eq!(row[2], expected);
    }
    // the bound is not proportional to r to within 1%, so --check reports it
    let checked = qadvect(&["bounds", "--out", &out_arg(dir.path()), "--check"]);
    assert_eq!(checked.status.code(), Some(4));
}

#[test]
fn forced_success_channel_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |d: &Path| {
        vec![
            "channel".to_owned(),
            "--n".into(),
            "16".into(),
            "--target".into(),
            "30".into(),
            "--mode".into(),
            "forced-success".into(),
            "--out".into(),
            out_arg(d),
        ]
    };
    let run = |d: &Path, seed: &str| {
        let mut v = args(d);
        v.extend(["--seed".into(), seed.into()]);
        let refs: Vec<&str> = v.iter().map(String::as_str).collect();
        assert!(qadvect(&refs).status.success());
    };
    run(a.path(), "1");
    run(b.path(), "2");
    for name in [
        "snapshot_00030.csv",
        "error_00030.csv",
        "snapshot_00010.csv",
    ] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap()
        );
    }
    let manifest = json(&a.path().join("manifest.json"));
    assert_eq!(manifest["seeds"]["sampling"], 1);
    assert_eq!(manifest["config"]["n"], 16);
    assert_eq!(manifest["config"]["mode"], "forced-success");
    let pgm = fs::read(a.path().join("snapshot_00030.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n16 16\n255\n"));
    assert_eq!(pgm.len(), b"P5\n16 16\n255\n".len() + 256);
    let success = fs::read_to_string(a.path().join("success.csv")).unwrap();
    assert_eq!(success.lines().count(), 31);
}

#[test]
fn quarter_angle_succeeds_about_half_the_time() {
    let dir = tempfile::tempdir().unwrap();
    let out = qadvect(&[
        "channel",
        "--n",
        "16",
        "--r-max",
        "0.25",
        "--theta",
        "0.7853981633974483",
        "--target",
        "400",
        "--seed",
        "3",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert!(out.status.success());
    let s = json(&dir.path().join("summary.json"));
    let attempts = s["attempts"].as_f64().unwrap();
    let sigma = (0.25 / attempts).sqrt();
    assert!((s["success_fraction"].as_f64().unwrap() - 0.5).abs() < 3.0 * sigma);
}

#[test]
fn large_r_run_covers_same_time() {
    let dir = tempfile::tempdir().unwrap();
    let theta = (std::f64::consts::PI / (1.0 + 1.25f64.sqrt())).to_string();
    let out = qadvect(&[
        "channel",
        "--r-max",
        "0.5",
        "--theta",
        &theta,
        "--target",
        "400",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert!(out.status.success());
    let s = json(&dir.path().join("summary.json"));
    assert_eq!(s["successes"], 400);
    assert!((s["time"].as_f64().unwrap() - 2000.0 * 0.1 / 64.0).abs() < 1e-12);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"experiment":"channel","n":16,"target":20,"seed":5,"snapshots":[0,20]}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("run");
    let out = qadvect(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "8",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let manifest = json(&out_dir.join("manifest.json"));
    assert_eq!(manifest["config"]["seed"], 8);
    assert_eq!(manifest["config"]["target"], 20);
    assert!(out_dir.join("snapshot_00020.csv").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"experiment":"channel","unknown":1}"#).unwrap();
    assert_eq!(
        qadvect(&["run", "--config", cfg.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(qadvect(&["run"]).status.code(), Some(2));
    assert_eq!(
        qadvect(&["channel", "--r-max", "1.5"]).status.code(),
        Some(2)
    );
    // success probability ~1e-8 exhausts the attempt budget
    let out = qadvect(&[
        "channel",
        "--n",
        "8",
        "--theta",
        "1e-4",
        "--target",
        "1",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn cavity_from_csv_velocity() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let out = qadvect(&[
        "cavity",
        "--n",
        "16",
        "--target",
        "20",
        "--mode",
        "forced-success",
        "--out",
        first.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let s = json(&first.join("summary.json"));
    assert!(s["max_norm_deviation"].as_f64().unwrap() < 1e-10);
    assert!(first.join("streamfunction.pgm").exists());

    let (u, v) = (first.join("velocity_u.csv"), first.join("velocity_v.csv"));
    let second = dir.path().join("second");
    let out = qadvect(&[
        "cavity",
        "--n",
        "16",
        "--target",
        "20",
        "--mode",
        "forced-success",
        "--velocity-u",
        u.to_str().unwrap(),
        "--velocity-v",
        v.to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(
        fs::read(first.join("snapshot_00020.csv")).unwrap(),
        fs::read(second.join("snapshot_00020.csv")).unwrap()
    );
    let mismatch = qadvect(&[
        "cavity",
        "--n",
        "17",
        "--velocity-u",
        u.to_str().unwrap(),
        "--velocity-v",
        v.to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ]);
    assert_eq!(mismatch.status.code(), Some(2));
}

#[test]
fn noise_comparison_writes_all_series() {
    let dir = tempfile::tempdir().unwrap();
    let out = qadvect(&[
        "noise",
        "--n",
        "16",
        "--target",
        "100",
        "--series-every",
        "25",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("noise_series.csv")).unwrap();
    assert!(csv.starts_with("stencil,case,step,mean_error\n"));
    assert_eq!(csv.lines().count(), 1 + 9 * 5);
    let s = json(&dir.path().join("summary.json"));
    let clean = &s["stencils"]["central2"]["none"];
    let noisy = &s["stencils"]["central2"]["matrix"];
    assert!(
        noisy["slope_percent_per_step"].as_f64().unwrap()
            > clean["slope_percent_per_step"].as_f64().unwrap()
    );
}
