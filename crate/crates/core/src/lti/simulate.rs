use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use super::discrete::delay_samples;
use super::{poly, DiscreteTransferFunction, LtiError, TimeSeries, TransferFunction};

/// Anything that maps a uniformly sampled input sequence to an output
/// sequence of the same length, starting from rest.
pub trait Simulate {
    fn simulate_samples(&self, input: &[f64], sample_time: f64) -> Result<Vec<f64>, LtiError>;
}

/// Runs `sys` on the `u` column of `input` and returns a series with the
/// same `t` and `u` and the response in `y`.
pub fn simulate<S: Simulate + ?Sized>(sys: &S, input: &TimeSeries) -> Result<TimeSeries, LtiError> {
    let y = sys.simulate_samples(input.u(), input.sample_time())?;
    TimeSeries::new(input.t().to_vec(), input.u().to_vec(), y)
}

/// Stateful ZOH-sampled continuous plant for use inside a loop.
///
/// Each call to [`SampledPlant::step`] holds the given input over one
/// sample period and returns the output at the start of that period.
#[derive(Debug, Clone)]
pub struct SampledPlant {
    ad: DMatrix<f64>,
    bd: DVector<f64>,
    c: DVector<f64>,
    d: f64,
    x: DVector<f64>,
    pending: VecDeque<f64>,
    delay: usize,
    sample_time: f64,
}

impl SampledPlant {
    pub fn new(sys: &TransferFunction, sample_time: f64) -> Result<Self, LtiError> {
        let delay = delay_samples(sys.dead_time(), sample_time)?;
        let ss = sys.to_state_space();
        let n = ss.order();
        let (ad, bd) = if n == 0 {
            (DMatrix::zeros(0, 0), DMatrix::zeros(0, 1))
        } else {
            ss.zoh_matrices(sample_time)?
        };
        Ok(Self {
            ad,
            bd: bd.column(0).into_owned(),
            c: ss.c.row(0).transpose(),
            d: ss.d[(0, 0)],
            x: DVector::zeros(n),
            pending: std::iter::repeat_n(0.0, delay).collect(),
            delay,
            sample_time,
        })
    }

    pub fn sample_time(&self) -> f64 {
        self.sample_time
    }

    pub fn delay(&self) -> usize {
        self.delay
    }

    pub fn has_feedthrough(&self) -> bool {
        self.d != 0.0
    }

    /// Output at the current instant when it does not depend on the input
    /// about to be applied (delay ≥ 1 or no feedthrough).
    pub fn output(&self) -> f64 {
        let held = if self.delay > 0 { self.pending[0] } else { 0.0 };
        self.c.dot(&self.x) + self.d * held
    }

    /// Applies `u` for one period; returns the output at the start of it.
    pub fn step(&mut self, u: f64) -> f64 {
        let effective = if self.delay > 0 {
            self.pending.push_back(u);
            self.pending.pop_front().unwrap_or(0.0)
        } else {
            u
        };
        let y = self.c.dot(&self.x) + self.d * effective;
        if !self.x.is_empty() {
            self.x = &self.ad * &self.x + &self.bd * effective;
        }
        y
    }

    pub fn reset(&mut self) {
        self.x.fill(0.0);
        self.pending.iter_mut().for_each(|v| *v = 0.0);
    }
}

impl Simulate for TransferFunction {
    fn simulate_samples(&self, input: &[f64], sample_time: f64) -> Result<Vec<f64>, LtiError> {
        let mut plant = SampledPlant::new(self, sample_time)?;
        Ok(input.iter().map(|&u| plant.step(u)).collect())
    }
}

impl Simulate for DiscreteTransferFunction {
    fn simulate_samples(&self, input: &[f64], sample_time: f64) -> Result<Vec<f64>, LtiError> {
        if (self.sample_time() - sample_time).abs() > 1e-9 * self.sample_time() {
            return Err(LtiError::SampleTimeMismatch {
                system: self.sample_time(),
                signal: sample_time,
            });
        }
        let den = self.den();
        let n = poly::degree(den);
        let num = poly::pad_to(self.num(), n + 1);
        let delay = self.delay();
        let mut y = vec![0.0; input.len()];
        // den is monic: y[k] = sum b_i u[k-i-delay] - sum a_j y[k-j]
        for k in 0..input.len() {
            let mut acc = 0.0;
            for (i, &b) in num.iter().enumerate() {
                if let Some(idx) = k.checked_sub(i + delay) {
                    acc += b * input[idx];
                }
            }
            for (j, &a) in den.iter().enumerate().skip(1) {
                if let Some(idx) = k.checked_sub(j) {
                    acc -= a * y[idx];
                }
            }
            y[k] = acc;
        }
        Ok(y)
    }
}

#[cfg(test)]
mod tests {
    use super::super::c2d_zoh;
    use super::*;

    fn paper_plant() -> TransferFunction {
        TransferFunction::new(&[1.0, 2.8], &[1.0, 5.44, 2.2], 0.3).unwrap()
    }

    #[test]
    fn identity_system() {
        let g = TransferFunction::new(&[1.0], &[1.0], 0.0).unwrap();
        let u: Vec<f64> = (0..10).map(|k| (k as f64).sin()).collect();
        assert_eq!(g.simulate_samples(&u, 0.1).unwrap(), u);
    }

    #[test]
    fn static_gain_step() {
        let g = TransferFunction::gain(2.0);
        let u = vec![5.0; 8];
        assert!(g.simulate_samples(&u, 0.05).unwrap().iter().all(|&y| y == 10.0));
    }

    #[test]
    fn dead_time_holds_output_at_zero() {
        let u = vec![1.0; 200];
        let y = paper_plant().simulate_samples(&u, 0.05).unwrap();
        // t < 0.3 s is samples 0..=5; sample 6 is the ZOH onset, still zero
        assert!(y[..=6].iter().all(|&v| v == 0.0));
        assert!(y[7] > 0.0);
    }

    #[test]
    fn ramp_slope_tends_to_dc_gain() {
        let t = 0.05;
        let n = (30.0 / t) as usize + 1;
        let u: Vec<f64> = (0..n).map(|k| k as f64 * t).collect();
        let y = paper_plant().simulate_samples(&u, t).unwrap();
        let slope = (y[n - 1] - y[n - 21]) / (20.0 * t);
        assert!((slope - 2.8 / 2.2).abs() / (2.8 / 2.2) < 0.01, "slope {slope}");
    }

    #[test]
    fn continuous_and_discrete_routes_agree() {
        let t = 0.05;
        let g = paper_plant();
        let d = c2d_zoh(&g, t).unwrap();
        let u: Vec<f64> = (0..400).map(|k| ((k / 7) % 3) as f64 - 1.0).collect();
        let a = g.simulate_samples(&u, t).unwrap();
        let b = d.simulate_samples(&u, t).unwrap();
        let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn rate_mismatch() {
        let d = DiscreteTransferFunction::new(&[1.0], &[1.0, -0.5], 0.1, 0).unwrap();
        assert!(matches!(
            d.simulate_samples(&[1.0, 1.0], 0.05),
            Err(LtiError::SampleTimeMismatch { .. })
        ));
    }

    #[test]
    fn streaming_output_peek() {
        let mut p = SampledPlant::new(&paper_plant(), 0.05).unwrap();
        for _ in 0..20 {
            let peek = p.output();
            let y = p.step(1.0);
            assert_eq!(peek, y);
        }
    }
}
