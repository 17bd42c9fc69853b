use std::path::Path;

use trike_core::kinematics::write_pose_csv;
use trike_core::lti::{step_metrics, LtiError, TimeSeries};
use trike_core::numfmt::sig9;
use trike_core::pid::{design, DigitalPid};
use trike_core::sim::{run_open_loop, run_steering_loop, run_trajectory_loop, run_velocity_loop, Hammerstein, LoopKind};
use trike_core::sysid::{estimate_delay, identify_iv, linearity_scan, IdExperiment, OperatingPoint};

use crate::config::{self, PlantConfig, RunConfig};
use crate::output::{kv, kv_list, kv_roots, kv_str, write_atomic, write_atomic_to};
use crate::{Cli, CliError, Command};

pub fn run(cli: Cli) -> Result<(), CliError> {
    let Cli {
        config: config_path,
        out,
        seed,
        mut overrides,
        command,
    } = cli;
    let load = |overrides: &[String]| config::load_file(config_path.as_deref(), overrides, seed);
    match command {
        Command::Simulate { loop_kind } => {
            let cfg = load(&overrides)?;
            simulate(&cfg, loop_kind.map_or(cfg.scenario.loop_kind, Into::into), &out)
        }
        Command::Trajectory => simulate(&load(&overrides)?, LoopKind::Trajectory, &out),
        Command::Design { write } => design_cmd(&load(&overrides)?, write.as_deref()),
        Command::Identify {
            data,
            zeros,
            poles,
            dead_time,
            op_voltage,
            op_speed,
        } => {
            push(&mut overrides, "identify.zeros", zeros);
            push(&mut overrides, "identify.poles", poles);
            push(&mut overrides, "identify.dead_time", dead_time);
            push(&mut overrides, "operating_point.voltage", op_voltage);
            push(&mut overrides, "operating_point.speed", op_speed);
            identify_cmd(&load(&overrides)?, &data, &out)
        }
        Command::Linearity {
            amplitudes,
            f0,
            linear_plant,
        } => {
            if let Some(a) = amplitudes {
                let list: Vec<String> = a.iter().map(|v| v.to_string()).collect();
                overrides.push(format!("linearity.amplitudes=[{}]", list.join(",")));
            }
            push(&mut overrides, "linearity.f0", f0);
            linearity_cmd(&load(&overrides)?, linear_plant, &out)
        }
        Command::CalibrateK { slope, write } => calibrate_cmd(&load(&overrides)?, slope, write.as_deref()),
        Command::Gnuplot => gnuplot_cmd(&out),
        Command::PrintConfig => {
            print!("{}", config::DEFAULT_CONFIG);
            Ok(())
        }
    }
}

fn push<T: std::fmt::Display>(overrides: &mut Vec<String>, key: &str, value: Option<T>) {
    if let Some(v) = value {
        overrides.push(format!("{key}={v}"));
    }
}

fn simulate(cfg: &RunConfig, loop_kind: LoopKind, out: &Path) -> Result<(), CliError> {
    let scenario = cfg.scenario_for(loop_kind)?;
    match loop_kind {
        LoopKind::Velocity => {
            kv_str("loop", "velocity");
            report_gains(&scenario.gains);
            let trace = run_velocity_loop(&scenario).map_err(CliError::from_sim)?;
            let ts = trace.timeseries().map_err(CliError::from_lti)?;
            let path = write_atomic(out, "velocity.csv", &series_csv(&ts)?)?;
            let mut table = String::from("t,reference,duty,voltage,speed\n");
            for k in 0..trace.t.len() {
                let row = [trace.t[k], trace.reference[k], trace.duty[k], trace.voltage[k], trace.speed[k]];
                table.push_str(&row.map(sig9).join(","));
                table.push('\n');
            }
            let detail = write_atomic(out, "velocity_signals.csv", table.as_bytes())?;
            report_metrics(&ts);
            kv_str("wrote", path.display());
            kv_str("wrote", detail.display());
        }
        LoopKind::OpenLoop => {
            kv_str("loop", "open_loop");
            let ts = run_open_loop(&scenario).map_err(CliError::from_sim)?;
            let path = write_atomic(out, "open_loop.csv", &series_csv(&ts)?)?;
            report_metrics(&ts);
            kv_str("wrote", path.display());
        }
        LoopKind::Steering => {
            kv_str("loop", "steering");
            report_gains(&scenario.gains);
            let ts = run_steering_loop(&scenario, &cfg.steering).map_err(CliError::from_sim)?;
            let path = write_atomic(out, "steering.csv", &series_csv(&ts)?)?;
            report_metrics(&ts);
            kv_str("wrote", path.display());
        }
        LoopKind::Trajectory => {
            kv_str("loop", "trajectory");
            let records = run_trajectory_loop(&scenario, &cfg.trajectory, &cfg.steering).map_err(CliError::from_sim)?;
            let mut bytes = Vec::new();
            write_pose_csv(&records, &mut bytes).map_err(CliError::io)?;
            let path = write_atomic(out, "trajectory.csv", &bytes)?;
            if let Some(last) = records.last() {
                kv("kappa_final", last.kappa);
                kv("x_final", last.pose.x);
                kv("y_final", last.pose.y);
                kv("heading_final", last.pose.heading);
                kv("steer_final", last.steer);
            }
            kv_str("wrote", path.display());
        }
    }
    Ok(())
}

fn series_csv(ts: &TimeSeries) -> Result<Vec<u8>, CliError> {
    let mut bytes = Vec::new();
    ts.write_csv(&mut bytes).map_err(CliError::from_lti)?;
    Ok(bytes)
}

fn report_gains(g: &trike_core::PidGains) {
    kv("kp", g.kp);
    kv("ki", g.ki);
    kv("kd", g.kd);
}

fn report_metrics(ts: &TimeSeries) {
    match step_metrics(ts) {
        Ok(m) => {
            kv("rise_time_10_90", m.rise_time_10_90);
            kv("overshoot", m.overshoot);
            kv("settling_time_2pct", m.settling_time_2pct);
            kv("steady_state", m.steady_state);
        }
        Err(LtiError::NotSettled) => kv_str("step_metrics", "not_settled"),
        Err(e) => kv_str("step_metrics", e),
    }
}

fn design_cmd(cfg: &RunConfig, write: Option<&Path>) -> Result<(), CliError> {
    let plant = cfg.plant()?;
    let d = design(&plant, cfg.sample_time, &cfg.design_spec()).map_err(CliError::from_pid)?;
    kv("omega_w1", d.omega);
    kv("plant_magnitude", d.plant_magnitude);
    report_gains(&d.gains);
    let dz = DigitalPid::new(d.gains, cfg.sample_time)
        .and_then(|p| p.transfer_function())
        .map_err(CliError::from_pid)?;
    kv_list("dz_num", dz.num());
    kv_list("dz_den", dz.den());
    if let Some(path) = write {
        let mut copy = cfg.clone();
        copy.gains = Some(d.gains);
        write_atomic_to(path, copy.to_json().as_bytes())?;
        kv_str("wrote", path.display());
    }
    Ok(())
}

fn identify_cmd(cfg: &RunConfig, data: &Path, out: &Path) -> Result<(), CliError> {
    let file = std::fs::File::open(data).map_err(|e| CliError::io(format!("{}: {e}", data.display())))?;
    let ts = TimeSeries::read_csv(std::io::BufReader::new(file))
        .map_err(|e| CliError::config(&data.display().to_string(), e))?;
    let op = OperatingPoint {
        voltage: cfg.operating_point.voltage,
        speed: cfg.operating_point.speed,
    };
    let experiment = IdExperiment::new(ts, op).map_err(CliError::from_sysid)?;
    let dead_time = match cfg.identify.dead_time {
        Some(d) => d,
        None => estimate_delay(&experiment).map_err(CliError::from_sysid)?,
    };
    let id = identify_iv(&experiment, cfg.identify.zeros, cfg.identify.poles, dead_time).map_err(CliError::from_sysid)?;
    let model = &id.model;
    kv_list("num", model.num());
    kv_list("den", model.den());
    kv("dead_time", model.dead_time());
    kv_roots("zeros", &model.zeros());
    kv_roots("poles", &model.poles());
    kv("dc_gain", model.dc_gain());
    kv("fit", id.fit);
    kv_str("stable", id.stable);
    kv("residual_max_autocorrelation", id.residual_whiteness.max_abs_autocorrelation);
    kv("residual_fraction_outside", id.residual_whiteness.fraction_outside);

    let mut copy = cfg.clone();
    copy.plant = PlantConfig {
        num: model.num().to_vec(),
        den: model.den().to_vec(),
        gain: 1.0,
        dead_time: model.dead_time(),
    };
    let path = write_atomic(out, "identified.json", copy.to_json().as_bytes())?;
    kv_str("wrote", path.display());
    Ok(())
}

fn linearity_cmd(cfg: &RunConfig, linear_plant: bool, out: &Path) -> Result<(), CliError> {
    let plant = cfg.plant()?;
    let lc = cfg.linearity_config();
    let amps = &cfg.linearity.amplitudes;
    let report = if linear_plant || cfg.scenario.bypass_map {
        linearity_scan(&plant, &lc, amps)
    } else {
        let drive = Hammerstein {
            map: cfg.bldc.clone(),
            plant,
            operating_point: cfg.operating_point,
        };
        linearity_scan(&drive, &lc, amps)
    }
    .map_err(CliError::from_sysid)?;
    let mut bytes = Vec::new();
    report.write_csv(&mut bytes).map_err(CliError::io)?;
    let path = write_atomic(out, "linearity.csv", &bytes)?;
    kv("f0", lc.f0);
    kv("threshold", report.threshold);
    kv("linear_range", report.linear_range);
    kv_str("wrote", path.display());
    Ok(())
}

fn calibrate_cmd(cfg: &RunConfig, slope: Option<f64>, write: Option<&Path>) -> Result<(), CliError> {
    let target = slope.unwrap_or_else(|| cfg.bldc.slope_at(cfg.operating_point.voltage));
    if !(target.is_finite() && target != 0.0) {
        return Err(CliError::config("slope", format!("must be finite and nonzero, got {target}")));
    }
    let p = &cfg.plant;
    let unit_dc = p.num[p.num.len() - 1] / p.den[p.den.len() - 1];
    if !(unit_dc.is_finite() && unit_dc != 0.0) {
        return Err(CliError::config("plant", "plant has no finite nonzero DC gain to scale"));
    }
    let gain = target / unit_dc;
    kv("slope", target);
    kv("gain", gain);
    kv("dc_gain", gain * unit_dc);
    if let Some(path) = write {
        let mut copy = cfg.clone();
        copy.plant.gain = gain;
        copy.validate()?;
        write_atomic_to(path, copy.to_json().as_bytes())?;
        kv_str("wrote", path.display());
    }
    Ok(())
}

/// `(csv, x column, y columns, title)` for every plot the script knows.
const PLOTS: &[(&str, usize, &[usize], &str)] = &[
    ("velocity.csv", 1, &[3], "speed (m/s)"),
    ("velocity_signals.csv", 1, &[2, 5], "reference and speed (m/s)"),
    ("open_loop.csv", 1, &[3], "open-loop speed (m/s)"),
    ("steering.csv", 1, &[2, 3], "steer reference and angle (rad)"),
    ("trajectory.csv", 2, &[3], "path (m)"),
    ("linearity.csv", 1, &[2], "fundamental power fraction"),
];

fn gnuplot_cmd(out: &Path) -> Result<(), CliError> {
    let mut script = String::from(
        "# Render with: gnuplot plots.gp (from the output directory)\n\
         set datafile separator ','\n\
         set key autotitle columnhead\n\
         set grid\n\
         set terminal pngcairo size 900,600\n",
    );
    let mut count = 0;
    for (csv, x, ys, title) in PLOTS {
        if !out.join(csv).exists() {
            continue;
        }
        count += 1;
        let stem = csv.trim_end_matches(".csv");
        script.push_str(&format!("\nset output '{stem}.png'\nset title '{title}'\n"));
        if *csv == "trajectory.csv" {
            script.push_str("set size ratio -1\n");
        } else {
            script.push_str("set size noratio\n");
        }
        let series: Vec<String> = ys.iter().map(|y| format!("'{csv}' using {x}:{y} with lines")).collect();
        script.push_str(&format!("plot {}\n", series.join(", ")));
    }
    let path = write_atomic(out, "plots.gp", script.as_bytes())?;
    kv_str("plots", count);
    kv_str("wrote", path.display());
    Ok(())
}
