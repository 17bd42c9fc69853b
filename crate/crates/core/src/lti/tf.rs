use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::poly;
use super::state_space::StateSpace;
use super::{LtiError, MAX_ORDER};

/// Continuous-time SISO transfer function `num(s)/den(s) * exp(-dead_time s)`.
///
/// The denominator is stored monic. Construct through [`TransferFunction::new`]
/// so the invariants hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTf", into = "RawTf")]
pub struct TransferFunction {
    num: Vec<f64>,
    den: Vec<f64>,
    dead_time: f64,
}

#[derive(Serialize, Deserialize)]
struct RawTf {
    num: Vec<f64>,
    den: Vec<f64>,
    #[serde(default)]
    dead_time: f64,
}

impl TryFrom<RawTf> for TransferFunction {
    type Error = LtiError;
    fn try_from(raw: RawTf) -> Result<Self, Self::Error> {
        TransferFunction::new(&raw.num, &raw.den, raw.dead_time)
    }
}

impl From<TransferFunction> for RawTf {
    fn from(tf: TransferFunction) -> Self {
        RawTf {
            num: tf.num,
            den: tf.den,
            dead_time: tf.dead_time,
        }
    }
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_phase(phi: f64) -> f64 {
    let mut p = phi % (2.0 * PI);
    if p <= -PI {
        p += 2.0 * PI;
    } else if p > PI {
        p -= 2.0 * PI;
    }
    p
}

/// Normalizes a (num, den) pair so the denominator is monic, validating
/// degree and finiteness. Shared with the discrete type.
pub(crate) fn normalize(num: &[f64], den: &[f64]) -> Result<(Vec<f64>, Vec<f64>), LtiError> {
    if num.iter().chain(den.iter()).any(|c| !c.is_finite()) {
        return Err(LtiError::NonFinite);
    }
    match den.first() {
        None => return Err(LtiError::ZeroDenominator),
        Some(&0.0) => return Err(LtiError::ZeroDenominator),
        _ => {}
    }
    let num = if num.is_empty() {
        vec![0.0]
    } else {
        poly::trim_leading(num, 0.0)
    };
    let den_deg = poly::degree(den);
    let num_deg = poly::degree(&num);
    if num_deg > den_deg && num.iter().any(|&c| c != 0.0) {
        return Err(LtiError::ImproperSystem {
            num: num_deg,
            den: den_deg,
        });
    }
    if den_deg > MAX_ORDER {
        return Err(LtiError::OrderTooHigh(den_deg));
    }
    let lead = den[0];
    Ok((poly::scale(&num, 1.0 / lead), poly::scale(den, 1.0 / lead)))
}

impl TransferFunction {
    pub fn new(num: &[f64], den: &[f64], dead_time: f64) -> Result<Self, LtiError> {
        if !dead_time.is_finite() {
            return Err(LtiError::NonFinite);
        }
        if dead_time < 0.0 {
            return Err(LtiError::NegativeDeadTime(dead_time));
        }
        let (num, den) = normalize(num, den)?;
        Ok(Self {
            num,
            den,
            dead_time,
        })
    }

    /// Static gain `k`.
    pub fn gain(k: f64) -> Self {
        Self::new(&[k], &[1.0], 0.0).expect("finite static gain")
    }

    /// Builds `k * prod(s - z) / prod(s - p) * exp(-dead_time s)` from real
    /// zeros and poles.
    pub fn from_zpk(zeros: &[f64], poles: &[f64], k: f64, dead_time: f64) -> Result<Self, LtiError> {
        let to_c = |v: &[f64]| v.iter().map(|&r| Complex64::new(r, 0.0)).collect::<Vec<_>>();
        let num = poly::scale(&poly::from_roots(&to_c(zeros)), k);
        let den = poly::from_roots(&to_c(poles));
        Self::new(&num, &den, dead_time)
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }

    pub fn den(&self) -> &[f64] {
        &self.den
    }

    pub fn dead_time(&self) -> f64 {
        self.dead_time
    }

    pub fn order(&self) -> usize {
        poly::degree(&self.den)
    }

    /// Same rational part, different delay.
    pub fn with_dead_time(&self, dead_time: f64) -> Result<Self, LtiError> {
        Self::new(&self.num, &self.den, dead_time)
    }

    /// The delay-free rational part.
    pub fn rational(&self) -> Self {
        Self {
            num: self.num.clone(),
            den: self.den.clone(),
            dead_time: 0.0,
        }
    }

    pub fn is_strictly_proper(&self) -> bool {
        poly::degree(&self.num) < poly::degree(&self.den) || self.num.iter().all(|&c| c == 0.0)
    }

    /// `num(0)/den(0)`; infinite for a pole at the origin.
    pub fn dc_gain(&self) -> f64 {
        poly::eval(&self.num, 0.0) / poly::eval(&self.den, 0.0)
    }

    pub fn zeros(&self) -> Vec<Complex64> {
        if self.num.iter().all(|&c| c == 0.0) {
            return Vec::new();
        }
        poly::roots(&self.num)
    }

    pub fn poles(&self) -> Vec<Complex64> {
        poly::roots(&self.den)
    }

    /// Rational part evaluated at an arbitrary complex `s`, delay included.
    pub fn eval(&self, s: Complex64) -> Complex64 {
        poly::eval_complex(&self.num, s) / poly::eval_complex(&self.den, s) * (-s * self.dead_time).exp()
    }

    /// Complex gain at `s = j omega`.
    pub fn freq_response(&self, omega: f64) -> Result<Complex64, LtiError> {
        if omega < 0.0 || omega.is_nan() {
            return Err(LtiError::NegativeFrequency(omega));
        }
        let s = Complex64::new(0.0, omega);
        let den = poly::eval_complex(&self.den, s);
        if den.norm() < 1e-12 {
            return Err(LtiError::PoleOnAxis(omega));
        }
        let rational = poly::eval_complex(&self.num, s) / den;
        Ok(rational * Complex64::from_polar(1.0, -omega * self.dead_time))
    }

    /// `(magnitude, phase)` with the phase wrapped to `(-pi, pi]`.
    pub fn magnitude_phase(&self, omega: f64) -> Result<(f64, f64), LtiError> {
        let g = self.freq_response(omega)?;
        Ok((g.norm(), wrap_phase(g.arg())))
    }

    /// Phase continuous in `omega`, summed factor by factor over zeros and
    /// poles plus the linear delay term.
    pub fn phase_unwrapped(&self, omega: f64) -> Result<f64, LtiError> {
        let g = self.freq_response(omega)?;
        if g.norm() == 0.0 {
            return Ok(0.0);
        }
        let s = Complex64::new(0.0, omega);
        let lead = self.num.iter().copied().find(|&c| c != 0.0).unwrap_or(0.0);
        let mut phase = if lead < 0.0 { PI } else { 0.0 };
        for z in self.zeros() {
            phase += factor_phase(s, z);
        }
        for p in self.poles() {
            phase -= factor_phase(s, p);
        }
        Ok(phase - omega * self.dead_time)
    }

    /// Series connection `self * other`.
    pub fn series(&self, other: &TransferFunction) -> Result<Self, LtiError> {
        Self::new(
            &poly::mul(&self.num, &other.num),
            &poly::mul(&self.den, &other.den),
            self.dead_time + other.dead_time,
        )
    }

    /// Controllable canonical realization of the rational part; the dead
    /// time is carried alongside.
    pub fn to_state_space(&self) -> StateSpace {
        StateSpace::controllable_canonical(&self.num, &self.den, self.dead_time)
    }
}

/// Phase of `s - root`, taken continuous along the positive imaginary axis:
/// left-half-plane roots stay in `(-pi/2, pi/2)`, right-half-plane ones in
/// `(pi/2, 3pi/2)`.
fn factor_phase(s: Complex64, root: Complex64) -> f64 {
    let v = s - root;
    let mut a = v.arg();
    if a < -PI / 2.0 {
        a += 2.0 * PI;
    }
    a
}
