use num_complex::Complex64;

use super::tf::normalize;
use super::{poly, LtiError, TransferFunction, MAX_ORDER};

/// Discrete-time SISO transfer function `num(z)/den(z) * z^-delay` with a
/// fixed sample time.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteTransferFunction {
    num: Vec<f64>,
    den: Vec<f64>,
    sample_time: f64,
    delay: usize,
}

/// Tolerance on `dead_time / T` being an integer.
const DELAY_RESIDUE_TOL: f64 = 1e-2;

pub(crate) fn delay_samples(dead_time: f64, sample_time: f64) -> Result<usize, LtiError> {
    if !(sample_time > 0.0) || !sample_time.is_finite() {
        return Err(LtiError::NonpositiveSampleTime(sample_time));
    }
    let ratio = dead_time / sample_time;
    let rounded = ratio.round();
    if (ratio - rounded).abs() > DELAY_RESIDUE_TOL {
        return Err(LtiError::FractionalDelay {
            dead_time,
            sample_time,
        });
    }
    Ok(rounded as usize)
}

impl DiscreteTransferFunction {
    pub fn new(num: &[f64], den: &[f64], sample_time: f64, delay: usize) -> Result<Self, LtiError> {
        if !(sample_time > 0.0) || !sample_time.is_finite() {
            return Err(LtiError::NonpositiveSampleTime(sample_time));
        }
        let (num, den) = normalize(num, den)?;
        Ok(Self {
            num,
            den,
            sample_time,
            delay,
        })
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }

    pub fn den(&self) -> &[f64] {
        &self.den
    }

    pub fn sample_time(&self) -> f64 {
        self.sample_time
    }

    /// Pure delay in samples.
    pub fn delay(&self) -> usize {
        self.delay
    }

    pub fn order(&self) -> usize {
        poly::degree(&self.den)
    }

    /// `num(1)/den(1)`.
    pub fn dc_gain(&self) -> f64 {
        poly::eval(&self.num, 1.0) / poly::eval(&self.den, 1.0)
    }

    pub fn poles(&self) -> Vec<Complex64> {
        poly::roots(&self.den)
    }

    pub fn zeros(&self) -> Vec<Complex64> {
        if self.num.iter().all(|&c| c == 0.0) {
            return Vec::new();
        }
        poly::roots(&self.num)
    }

    /// Evaluates at an arbitrary complex `z`, delay included.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        poly::eval_complex(&self.num, z) / poly::eval_complex(&self.den, z) * z.powi(-(self.delay as i32))
    }

    /// Response at `z = exp(j omega T)`.
    pub fn freq_response(&self, omega: f64) -> Result<Complex64, LtiError> {
        if omega < 0.0 || omega.is_nan() {
            return Err(LtiError::NegativeFrequency(omega));
        }
        let z = Complex64::from_polar(1.0, omega * self.sample_time);
        let den = poly::eval_complex(&self.den, z);
        if den.norm() < 1e-12 {
            return Err(LtiError::PoleOnAxis(omega));
        }
        Ok(poly::eval_complex(&self.num, z) / den * z.powi(-(self.delay as i32)))
    }

    /// Equivalent system with the pure delay absorbed into the denominator as
    /// `z^delay`.
    pub fn fold_delay(&self) -> Result<Self, LtiError> {
        let mut den = self.den.clone();
        den.extend(std::iter::repeat_n(0.0, self.delay));
        Self::new(&self.num, &den, self.sample_time, 0)
    }

    /// Series connection. Both systems must share the sample time.
    pub fn series(&self, other: &Self) -> Result<Self, LtiError> {
        self.check_rate(other)?;
        Self::new(
            &poly::mul(&self.num, &other.num),
            &poly::mul(&self.den, &other.den),
            self.sample_time,
            self.delay + other.delay,
        )
    }

    /// Unity negative feedback around `self`: `L / (1 + L)`, delay folded.
    pub fn unity_feedback(&self) -> Result<Self, LtiError> {
        let l = self.fold_delay()?;
        let den = poly::add(&l.den, &l.num);
        Self::new(&l.num, &den, self.sample_time, 0)
    }

    fn check_rate(&self, other: &Self) -> Result<(), LtiError> {
        if (self.sample_time - other.sample_time).abs() > 1e-9 * self.sample_time {
            return Err(LtiError::SampleTimeMismatch {
                system: self.sample_time,
                signal: other.sample_time,
            });
        }
        Ok(())
    }
}

/// Zero-order-hold equivalent; step responses agree exactly at the sample
/// instants. Dead time becomes an integer sample delay.
pub fn c2d_zoh(sys: &TransferFunction, sample_time: f64) -> Result<DiscreteTransferFunction, LtiError> {
    let delay = delay_samples(sys.dead_time(), sample_time)?;
    let ss = sys.to_state_space();
    let feedthrough = ss.d[(0, 0)];
    if ss.order() == 0 {
        return DiscreteTransferFunction::new(&[feedthrough], &[1.0], sample_time, delay);
    }
    let (ad, bd) = ss.zoh_matrices(sample_time)?;
    // adj(zI - A) = sum_k z^(n-1-k) N_k with N_0 = I, N_k = A N_(k-1) + a_k I.
    // Running the recursion on B keeps the numerator at the scale of C B
    // rather than as a difference of two characteristic polynomials.
    let den = poly::char_poly(&ad);
    let n = ss.order();
    let mut num = vec![feedthrough; n + 1];
    let mut v = bd.clone();
    for k in 0..n {
        if k > 0 {
            v = &ad * &v + &bd * den[k];
        }
        num[k + 1] = (&ss.c * &v)[(0, 0)] + feedthrough * den[k + 1];
    }
    DiscreteTransferFunction::new(&num, &den, sample_time, delay)
}

/// Bilinear (Tustin) discretization `s <- (2/T)(z-1)/(z+1)`.
pub fn c2d_tustin(sys: &TransferFunction, sample_time: f64) -> Result<DiscreteTransferFunction, LtiError> {
    let delay = delay_samples(sys.dead_time(), sample_time)?;
    let k = 2.0 / sample_time;
    let n = sys.order();
    let den_at_k = poly::eval(sys.den(), k);
    let den_scale: f64 = sys
        .den()
        .iter()
        .enumerate()
        .map(|(i, c)| c.abs() * k.powi((n - i) as i32))
        .sum();
    if den_at_k.abs() <= 1e-12 * den_scale {
        return Err(LtiError::BilinearSingularity);
    }
    let num = poly::mobius_substitute(sys.num(), (k, -k), (1.0, 1.0), n);
    let den = poly::mobius_substitute(sys.den(), (k, -k), (1.0, 1.0), n);
    DiscreteTransferFunction::new(&num, &den, sample_time, delay)
}

/// Maps a discrete system to the w-plane with `z <- (1 + wT/2)/(1 - wT/2)`.
///
/// The pure delay is folded in as a rational factor, so the result has zero
/// dead time and order `order + delay`.
pub fn w_transform(dsys: &DiscreteTransferFunction) -> Result<TransferFunction, LtiError> {
    let folded = dsys.fold_delay()?;
    let order = folded.order();
    if order > MAX_ORDER {
        return Err(LtiError::OrderTooHigh(order));
    }
    let h = dsys.sample_time() / 2.0;
    let num = poly::mobius_substitute(folded.num(), (h, 1.0), (-h, 1.0), order);
    let den = poly::mobius_substitute(folded.den(), (h, 1.0), (-h, 1.0), order);
    // a discrete pole at z = -1 leaves a vanishing leading coefficient
    let den = poly::trim_leading(&den, 1e-13);
    let num = poly::trim_leading(&num, 1e-13);
    TransferFunction::new(&num, &den, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn first_order() -> TransferFunction {
        TransferFunction::new(&[1.0], &[1.0, 1.0], 0.0).unwrap()
    }

    #[test]
    fn zoh_first_order() {
        let d = c2d_zoh(&first_order(), 0.1).unwrap();
        let e = (-0.1f64).exp();
        // closed form (1 - e^-T)/(z - e^-T)
        assert_eq!(d.den().len(), 2);
        assert!((d.den()[1] + e).abs() < 1e-12);
        assert!((d.num()[0] - (1.0 - e)).abs() < 1e-12);
        assert!((d.dc_gain() - 1.0).abs() < 1e-12);
        assert!((d.poles()[0].re - 0.904_837_418_035_959_6).abs() < 1e-12);
    }

    #[test]
    fn zoh_integrator() {
        let g = TransferFunction::new(&[1.0], &[1.0, 0.0], 0.0).unwrap();
        let d = c2d_zoh(&g, 0.05).unwrap();
        assert!((d.num()[0] - 0.05).abs() < 1e-15);
        assert!((d.den()[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn zoh_delay_samples() {
        let g = TransferFunction::new(&[1.0, 2.8], &[1.0, 5.44, 2.2], 0.3).unwrap();
        assert_eq!(c2d_zoh(&g, 0.05).unwrap().delay(), 6);
        let frac = TransferFunction::new(&[1.0], &[1.0, 1.0], 0.33).unwrap();
        assert!(matches!(c2d_zoh(&frac, 0.05), Err(LtiError::FractionalDelay { .. })));
        assert!(matches!(c2d_zoh(&g, -1.0), Err(LtiError::NonpositiveSampleTime(_))));
    }

    #[test]
    fn zoh_static_gain() {
        let d = c2d_zoh(&TransferFunction::gain(3.0), 0.1).unwrap();
        assert_eq!(d.num(), &[3.0]);
        assert_eq!(d.den(), &[1.0]);
    }

    #[test]
    fn tustin_first_order_pole_at_origin() {
        let d = c2d_tustin(&first_order(), 2.0).unwrap();
        assert!(d.poles()[0].norm() < 1e-15);
    }

    #[test]
    fn tustin_static_and_integrator() {
        for &t in &[0.01, 0.5, 3.0] {
            let d = c2d_tustin(&TransferFunction::gain(3.0), t).unwrap();
            assert_eq!(d.num(), &[3.0]);
        }
        let g = TransferFunction::new(&[1.0], &[1.0, 0.0], 0.0).unwrap();
        let d = c2d_tustin(&g, 0.05).unwrap();
        // 0.025 (z + 1)/(z - 1)
        assert!((d.num()[0] - 0.025).abs() < 1e-15 && (d.num()[1] - 0.025).abs() < 1e-15);
        assert!((d.den()[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn tustin_singularity() {
        // pole at s = 2/T = 1
        let g = TransferFunction::new(&[1.0], &[1.0, -1.0], 0.0).unwrap();
        assert_eq!(c2d_tustin(&g, 2.0), Err(LtiError::BilinearSingularity));
    }

    #[test]
    fn w_transform_constant_and_integrator() {
        let d = DiscreteTransferFunction::new(&[2.0], &[1.0], 0.1, 0).unwrap();
        let w = w_transform(&d).unwrap();
        assert_eq!(w.num(), &[2.0]);
        assert_eq!(w.den(), &[1.0]);

        let t = 0.05;
        let integ = DiscreteTransferFunction::new(&[t], &[1.0, -1.0], t, 0).unwrap();
        let w = w_transform(&integ).unwrap();
        // T(1 - wT/2) / (wT) = (1 - wT/2)/w
        assert_eq!(w.order(), 1);
        assert!(w.den()[1].abs() < 1e-15);
        let poles = w.poles();
        assert!(poles[0].norm() < 1e-15);
    }

    #[test]
    fn w_plane_matches_discrete_response() {
        let t = 0.1;
        let d = c2d_zoh(&first_order(), t).unwrap();
        let w = w_transform(&d).unwrap();
        let omega: f64 = 1.0;
        let nu = 2.0 / t * (omega * t / 2.0).tan();
        let a = d.freq_response(omega).unwrap();
        let b = w.freq_response(nu).unwrap();
        assert!((a - b).norm() <= 1e-8 * a.norm());
    }

    #[test]
    fn w_plane_folds_delay() {
        let g = TransferFunction::new(&[1.0, 2.8], &[1.0, 5.44, 2.2], 0.3).unwrap();
        let d = c2d_zoh(&g, 0.05).unwrap();
        let w = w_transform(&d).unwrap();
        assert_eq!(w.order(), 8);
        for &omega in &[0.3_f64, 1.8, 3.6, 20.0] {
            let nu = 2.0 / 0.05 * (omega * 0.05 / 2.0).tan();
            let a = d.freq_response(omega).unwrap();
            let b = w.freq_response(nu).unwrap();
            assert!((a - b).norm() <= 1e-8 * a.norm(), "omega={omega}");
        }
    }

    #[test]
    fn feedback_of_gain() {
        let l = DiscreteTransferFunction::new(&[3.0], &[1.0], 0.1, 0).unwrap();
        let cl = l.unity_feedback().unwrap();
        assert!((cl.dc_gain() - 0.75).abs() < 1e-15);
    }
}
