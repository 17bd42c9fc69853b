use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use trike_core::lti::{c2d_zoh, Simulate, TimeSeries};
use trike_core::pid::{design, DesignSpec};
use trike_core::sim::{drive_plant, run_velocity_loop, BldcMap, Hammerstein, Scenario, Signal};
use trike_core::sysid::{identify_iv, linearity_scan, prbs, IdExperiment, LinearityConfig, OperatingPoint};

const T: f64 = 0.05;

fn lti(c: &mut Criterion) {
    let g = drive_plant(1.0).unwrap();
    c.bench_function("c2d_zoh", |b| b.iter(|| c2d_zoh(black_box(&g), T).unwrap()));
    let u = prbs(2000, 1);
    c.bench_function("simulate_2000", |b| b.iter(|| g.simulate_samples(black_box(&u), T).unwrap()));
}

fn control(c: &mut Criterion) {
    let g = drive_plant(1.0).unwrap();
    let spec = DesignSpec::default();
    c.bench_function("design_match_rise_time", |b| b.iter(|| design(black_box(&g), T, &spec).unwrap()));
    let gains = design(&g, T, &spec).unwrap().gains;
    let s = Scenario::velocity(g, gains, T, 60.0, Signal::Step { amplitude: 1.0, at: 0.0 });
    c.bench_function("velocity_loop_60s", |b| b.iter(|| run_velocity_loop(black_box(&s)).unwrap()));
}

fn identification(c: &mut Criterion) {
    let g = drive_plant(1.0).unwrap();
    let op = OperatingPoint::default();
    let u = prbs(2000, 1);
    let y = g.simulate_samples(&u, T).unwrap();
    let ts = TimeSeries::new(
        (0..u.len()).map(|k| k as f64 * T).collect(),
        u.iter().map(|v| v + op.voltage).collect(),
        y.iter().map(|v| v + op.speed).collect(),
    )
    .unwrap();
    let e = IdExperiment::new(ts, op).unwrap();
    c.bench_function("identify_iv_2000", |b| b.iter(|| identify_iv(black_box(&e), 1, 2, 0.3).unwrap()));

    let drive = Hammerstein {
        map: BldcMap::default(),
        plant: g,
        operating_point: op,
    };
    let amplitudes: Vec<f64> = (2..=20).map(f64::from).collect();
    let cfg = LinearityConfig::default();
    c.bench_function("linearity_scan_19", |b| b.iter(|| linearity_scan(&drive, &cfg, black_box(&amplitudes)).unwrap()));
}

criterion_group!(benches, lti, control, identification);
criterion_main!(benches);
