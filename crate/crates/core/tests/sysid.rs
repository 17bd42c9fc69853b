use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use trike_core::lti::{Simulate, TimeSeries, TransferFunction};
use trike_core::sysid::{estimate_delay_samples, identify_iv, prbs, IdExperiment, OperatingPoint};

const T: f64 = 0.05;

fn plant() -> TransferFunction {
    TransferFunction::new(&[1.0, 2.8], &[1.0, 5.44, 2.2], 0.3).unwrap()
}

fn record(u_dev: &[f64], y_dev: &[f64]) -> IdExperiment {
    let op = OperatingPoint::default();
    let ts = TimeSeries::new(
        (0..u_dev.len()).map(|k| k as f64 * T).collect(),
        u_dev.iter().map(|v| v + op.voltage).collect(),
        y_dev.iter().map(|v| v + op.speed).collect(),
    )
    .unwrap();
    IdExperiment::new(ts, op).unwrap()
}

fn worst_pole_error(model: &TransferFunction) -> f64 {
    let mut p: Vec<f64> = model.poles().iter().map(|c| c.re).collect();
    p.sort_by(f64::total_cmp);
    ((p[0] + 5.0) / 5.0).abs().max(((p[1] + 0.44) / 0.44).abs())
}

/// Pole error of the plain least-squares estimate on the same record.
fn ls_pole_error(u: &[f64], y: &[f64], split: usize) -> f64 {
    use nalgebra::{DMatrix, DVector};
    let d = 6;
    let rows: Vec<usize> = (d + 2..split).collect();
    let phi = DMatrix::from_fn(rows.len(), 4, |r, c| {
        let k = rows[r];
        match c {
            0 => -y[k - 1],
            1 => -y[k - 2],
            2 => u[k - 1 - d],
            _ => u[k - 2 - d],
        }
    });
    let target = DVector::from_iterator(rows.len(), rows.iter().map(|&k| y[k]));
    let th = phi.svd(true, true).solve(&target, 0.0).unwrap();
    let disc = trike_core::lti::DiscreteTransferFunction::new(&[th[2], th[3]], &[1.0, th[0], th[1]], T, d).unwrap();
    disc.poles()
        .iter()
        .map(|z| z.ln().re / T)
        .map(|p| ((p + 5.0) / 5.0).abs().min(((p + 0.44) / 0.44).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn noise_free_prbs_round_trip() {
    let u = prbs(2000, 1);
    let y = plant().simulate_samples(&u, T).unwrap();
    let e = record(&u, &y);
    assert_eq!(estimate_delay_samples(&e).unwrap(), 6);
    let id = identify_iv(&e, 1, 2, 0.3).unwrap();
    assert!(worst_pole_error(&id.model) < 1e-6);
    assert!(((id.model.zeros()[0].re + 2.8) / 2.8).abs() < 1e-6);
    assert_eq!(id.discrete.delay(), 6);
    assert!((id.model.dead_time() - 0.3).abs() < 1e-12);
}

#[test]
fn noisy_monte_carlo_at_20_db() {
    let u = prbs(2000, 1);
    let y0 = plant().simulate_samples(&u, T).unwrap();
    let mean = y0.iter().sum::<f64>() / y0.len() as f64;
    let rms = (y0.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / y0.len() as f64).sqrt();
    let noise = Normal::new(0.0, rms / 10.0).unwrap();
    let (mut iv, mut ls) = (Vec::new(), Vec::new());
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y: Vec<f64> = y0.iter().map(|v| v + noise.sample(&mut rng)).collect();
        let e = record(&u, &y);
        assert_eq!(estimate_delay_samples(&e).unwrap(), 6, "seed {seed}");
        let id = identify_iv(&e, 1, 2, 0.3).unwrap();
        assert!(id.fit > 0.85, "seed {seed}: fit {}", id.fit);
        iv.push(worst_pole_error(&id.model));
        ls.push(ls_pole_error(&u, &y, 1400));
    }
    iv.sort_by(f64::total_cmp);
    ls.sort_by(f64::total_cmp);
    let (iv_med, ls_med) = (0.5 * (iv[9] + iv[10]), 0.5 * (ls[9] + ls[10]));
    assert!(iv_med < 0.10, "median pole error {iv_med}");
    assert!(iv_med < ls_med, "iv {iv_med} vs ls {ls_med}");
}
