use std::path::Path;
use std::process::{Command, Output};

use trike_core::lti::{c2d_zoh, w_transform, TransferFunction};

fn trikectl(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trikectl"))
        .current_dir(dir)
        .env("TRIKECTL_NO_COLOR", "1")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Value of a `key=value` summary line.
fn value(o: &Output, key: &str) -> String {
    let prefix = format!("{key}=");
    stdout(o)
        .lines()
        .find_map(|l| l.strip_prefix(&prefix).map(str::to_string))
        .unwrap_or_else(|| panic!("no `{key}` in\n{}", stdout(o)))
}

fn number(o: &Output, key: &str) -> f64 {
    value(o, key).parse().unwrap()
}

fn open_loop_step(dir: &Path) {
    let o = trikectl(
        dir,
        &[
            "simulate",
            "--set",
            "scenario.loop=open_loop",
            "--set",
            r#"scenario.reference={"kind":"step","amplitude":2.0,"at":1.0}"#,
            "--set",
            "scenario.duration=30",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn default_simulation_meets_the_rise_target() {
    let dir = tempfile::tempdir().unwrap();
    let o = trikectl(dir.path(), &["simulate"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rise = number(&o, "rise_time_10_90");
    assert!((0.4..=0.6).contains(&rise), "{rise}");
    let csv = std::fs::read_to_string(dir.path().join("out/velocity.csv")).unwrap();
    assert!(csv.starts_with("t,u,y\n0,"));
    let detail = std::fs::read_to_string(dir.path().join("out/velocity_signals.csv")).unwrap();
    assert!(detail.starts_with("t,reference,duty,voltage,speed\n"));
}

#[test]
fn zero_denominator_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = trikectl(dir.path(), &["simulate", "--set", "plant.den=[0]"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("plant.den"), "{}", stderr(&o));
    assert!(!stderr(&o).contains('\x1b'));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    let text = trike_cli_default().replace("\"sample_time\"", "\"sampel_time\": 1, \"sample_time\"");
    std::fs::write(&cfg, text).unwrap();
    let o = trikectl(dir.path(), &["--config", cfg.to_str().unwrap(), "simulate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sampel_time"), "{}", stderr(&o));
}

fn trike_cli_default() -> String {
    let o = trikectl(Path::new("."), &["print-config"]);
    assert!(o.status.success());
    stdout(&o)
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, b"x").unwrap();
    let o = trikectl(dir.path(), &["simulate", "--out", "file/sub"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn design_prints_the_frozen_gains() {
    let dir = tempfile::tempdir().unwrap();
    let o = trikectl(dir.path(), &["design", "--write", "designed.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(value(&o, "kp"), "2.92649031");
    assert_eq!(value(&o, "ki"), "0.261386605");
    assert_eq!(value(&o, "kd"), "-0.0614158992");
    assert_eq!(value(&o, "omega_w1"), "1.78634868");
    assert_eq!(value(&o, "dz_den"), "1,-1,0");
    // the written copy runs with fixed gains
    let o = trikectl(dir.path(), &["--config", "designed.json", "simulate"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(value(&o, "kp"), "2.92649031");
}

#[test]
fn zero_phase_at_unit_magnitude_gives_unit_kp() {
    let dir = tempfile::tempdir().unwrap();
    let omega = 0.8;
    let lag = TransferFunction::new(&[1.0], &[1.0, 1.0], 0.0).unwrap();
    let mag = w_transform(&c2d_zoh(&lag, 0.05).unwrap()).unwrap().freq_response(omega).unwrap().norm();
    let o = trikectl(
        dir.path(),
        &[
            "design",
            "--set",
            "plant.num=[1]",
            "--set",
            "plant.den=[1,1]",
            "--set",
            "plant.dead_time=0",
            "--set",
            &format!("plant.gain={}", 1.0 / mag),
            "--set",
            "design.theta_deg=0",
            "--set",
            &format!(r#"design.crossover={{"rule":"fixed","omega":{omega}}}"#),
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(value(&o, "kp"), "1");
}

#[test]
fn nonpositive_rise_time_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = trikectl(dir.path(), &["design", "--set", "design.rise_time=0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("design.rise_time"));
}

#[test]
fn identify_recovers_the_open_loop_plant() {
    let dir = tempfile::tempdir().unwrap();
    open_loop_step(dir.path());
    let o = trikectl(dir.path(), &["identify", "--data", "out/open_loop.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let poles: Vec<f64> = value(&o, "poles").split(',').map(|p| p.parse().unwrap()).collect();
    let mut poles = poles;
    poles.sort_by(f64::total_cmp);
    assert!((poles[0] + 5.0).abs() < 0.05 && (poles[1] + 0.44).abs() < 0.0044, "{poles:?}");
    assert!((number(&o, "zeros") + 2.8).abs() < 0.028);
    assert_eq!(value(&o, "dead_time"), "0.3");
    assert!(dir.path().join("out/identified.json").exists());
}

#[test]
fn identify_rejects_inadequate_or_malformed_data() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("flat.csv"), "t,u,y\n0,11,1\n0.05,11,1\n0.1,11,1\n").unwrap();
    assert_eq!(trikectl(p, &["identify", "--data", "flat.csv"]).status.code(), Some(4));
    std::fs::write(p.join("jitter.csv"), "t,u,y\n0,11,1\n0.05,12,1\n0.2,11,1\n").unwrap();
    assert_eq!(trikectl(p, &["identify", "--data", "jitter.csv"]).status.code(), Some(2));
    std::fs::write(p.join("header.csv"), "time,u,y\n0,11,1\n0.05,12,1\n").unwrap();
    assert_eq!(trikectl(p, &["identify", "--data", "header.csv"]).status.code(), Some(2));
    assert_eq!(trikectl(p, &["identify", "--data", "missing.csv"]).status.code(), Some(3));
}

#[test]
fn linearity_finds_the_upper_knee() {
    let dir = tempfile::tempdir().unwrap();
    let o = trikectl(dir.path(), &["linearity"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let range = number(&o, "linear_range");
    assert!((range - 17.0).abs() <= 1.0, "{range}");
    let csv = std::fs::read_to_string(dir.path().join("out/linearity.csv")).unwrap();
    assert!(csv.starts_with("amplitude,fundamental_power,distortion,verdict\n2,"));

    let o = trikectl(dir.path(), &["linearity", "--linear-plant"]);
    let csv = std::fs::read_to_string(dir.path().join("out/linearity.csv")).unwrap();
    assert_eq!(number(&o, "linear_range"), 20.0);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",linear")));
}

#[test]
fn misaligned_frequency_suggests_a_window() {
    let dir = tempfile::tempdir().unwrap();
    let o = trikectl(dir.path(), &["linearity", "--f0", "0.13"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("aligned window is 100 s"), "{}", stderr(&o));
}

#[test]
fn trajectory_alias_writes_the_pose_schema() {
    let dir = tempfile::tempdir().unwrap();
    let o = trikectl(dir.path(), &["trajectory", "--set", "scenario.duration=20"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!((number(&o, "kappa_final") - 0.5).abs() < 0.05);
    let csv = std::fs::read_to_string(dir.path().join("out/trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,x,y,heading,vx,omega,kappa,steer\n"));
}

#[test]
fn steering_loop_runs_from_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = trikectl(
        dir.path(),
        &["simulate", "--loop", "steering", "--set", r#"scenario.reference={"kind":"step","amplitude":0.2}"#, "--set", "scenario.duration=10"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!((number(&o, "steady_state") - 0.2).abs() < 1e-3);
}

#[test]
fn calibration_matches_the_requested_slope() {
    let dir = tempfile::tempdir().unwrap();
    let o = trikectl(dir.path(), &["calibrate-k", "--slope", "1.27272727", "--write", "k.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!((number(&o, "gain") - 1.0).abs() < 1e-8);
    let o = trikectl(dir.path(), &["calibrate-k"]);
    // default target: the map slope at the operating point, 3/17 m/s per V
    assert!((number(&o, "dc_gain") - 3.0 / 17.0).abs() < 1e-8);
    let text = std::fs::read_to_string(dir.path().join("k.json")).unwrap();
    assert!(text.contains("\"gain\": 1.0"), "{text}");
}

#[test]
fn seeded_noise_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: &str, name: &str| {
        let o = trikectl(dir.path(), &["simulate", "--seed", seed, "--set", "scenario.noise_std=0.02", "--out", name]);
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read(dir.path().join(name).join("velocity.csv")).unwrap()
    };
    let a = run("3", "a");
    assert_eq!(a, run("3", "b"));
    assert_ne!(a, run("4", "c"));
}

#[test]
fn gnuplot_script_lists_existing_outputs() {
    let dir = tempfile::tempdir().unwrap();
    trikectl(dir.path(), &["simulate"]);
    let o = trikectl(dir.path(), &["gnuplot"]);
    assert!(o.status.success());
    assert_eq!(value(&o, "plots"), "2");
    let script = std::fs::read_to_string(dir.path().join("out/plots.gp")).unwrap();
    assert!(script.contains("'velocity.csv' using 1:3"));
    assert!(!script.contains("trajectory.csv"));
}
