//! Gain-crossover PID synthesis and the discrete controller
//! `D(z) = Kp + (Ki T/2)(z+1)/(z-1) + Kd (z-1)/(T z)`.
//!
//! Design works on any [`TransferFunction`]; the intended input is the
//! w-plane image of the plant's zero-order-hold equivalent, so that the
//! sampling and the dead time are both accounted for at crossover.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::lti::{c2d_zoh, step_metrics, w_transform, DiscreteTransferFunction, LtiError, SampledPlant, TimeSeries, TransferFunction};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PidError {
    #[error("rise time must be positive, got {0}")]
    NonpositiveRiseTime(f64),
    #[error("crossover frequency must be positive, got {0}")]
    NonpositiveCrossover(f64),
    #[error("plant magnitude {0:e} at crossover is too small to invert")]
    PlantZeroGain(f64),
    #[error("phase angle {0} rad is outside (-pi/2, pi/2)")]
    ThetaOutOfRange(f64),
    #[error("integral gain must be finite and non-negative, got {0}")]
    NegativeKi(f64),
    #[error("sample time must be positive, got {0}")]
    NonpositiveSampleTime(f64),
    #[error("output limits must satisfy min < max, got ({0}, {1})")]
    InvalidLimits(f64, f64),
    #[error("no crossover below {0} rad/s meets the rise-time target")]
    SearchFailed(f64),
    #[error(transparent)]
    Lti(#[from] LtiError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

impl PidGains {
    pub fn new(kp: f64, ki: f64, kd: f64) -> Self {
        Self { kp, ki, kd }
    }

    /// Continuous `Kp + Ki/s + Kd s` at `s = j omega`.
    pub fn response(&self, omega: f64) -> Complex64 {
        Complex64::new(self.kp, self.kd * omega - self.ki / omega)
    }
}

/// How the crossover frequency is obtained from the rise-time target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", deny_unknown_fields)]
pub enum Crossover {
    /// `1.8 / tr`.
    Heuristic,
    /// Highest crossover at most `1.8 / tr` whose simulated closed-loop
    /// step rises no faster than `tr`.
    MatchRiseTime,
    Fixed { omega: f64 },
}

/// The free integral gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", deny_unknown_fields)]
pub enum KiChoice {
    /// `ki = kp * omega / divisor`.
    Proportional { divisor: f64 },
    Fixed { ki: f64 },
}

impl Default for KiChoice {
    fn default() -> Self {
        KiChoice::Proportional { divisor: 20.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignSpec {
    pub rise_time: f64,
    /// Controller phase at crossover, signed; negative is lag.
    pub theta: f64,
    pub crossover: Crossover,
    pub ki: KiChoice,
}

impl Default for DesignSpec {
    fn default() -> Self {
        Self {
            rise_time: 0.5,
            theta: -5f64.to_radians(),
            crossover: Crossover::MatchRiseTime,
            ki: KiChoice::default(),
        }
    }
}

impl DesignSpec {
    pub fn validate(&self) -> Result<(), PidError> {
        if !(self.rise_time > 0.0) || !self.rise_time.is_finite() {
            return Err(PidError::NonpositiveRiseTime(self.rise_time));
        }
        check_theta(self.theta)?;
        if let Crossover::Fixed { omega } = self.crossover {
            if !(omega > 0.0) || !omega.is_finite() {
                return Err(PidError::NonpositiveCrossover(omega));
            }
        }
        match self.ki {
            KiChoice::Fixed { ki } => check_ki(ki),
            KiChoice::Proportional { divisor } if !(divisor > 0.0) || !divisor.is_finite() => {
                Err(PidError::NegativeKi(divisor))
            }
            _ => Ok(()),
        }
    }
}

fn check_theta(theta: f64) -> Result<(), PidError> {
    if !(theta.abs() < FRAC_PI_2) {
        return Err(PidError::ThetaOutOfRange(theta));
    }
    Ok(())
}

fn check_ki(ki: f64) -> Result<(), PidError> {
    if !(ki >= 0.0) || !ki.is_finite() {
        return Err(PidError::NegativeKi(ki));
    }
    Ok(())
}

pub fn crossover_from_rise_time(rise_time: f64) -> Result<f64, PidError> {
    if !(rise_time > 0.0) || !rise_time.is_finite() {
        return Err(PidError::NonpositiveRiseTime(rise_time));
    }
    Ok(1.8 / rise_time)
}

const MIN_PLANT_GAIN: f64 = 1e-12;

/// Gains placing the loop `D G` at unit magnitude and controller phase
/// `theta` at `omega`.
pub fn design_pid(plant: &TransferFunction, omega: f64, theta: f64, ki: f64) -> Result<PidGains, PidError> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(PidError::NonpositiveCrossover(omega));
    }
    check_theta(theta)?;
    check_ki(ki)?;
    let mag = plant.freq_response(omega)?.norm();
    gains_for_magnitude(mag, omega, theta, ki)
}

fn gains_for_magnitude(mag: f64, omega: f64, theta: f64, ki: f64) -> Result<PidGains, PidError> {
    if !(mag > MIN_PLANT_GAIN) || !mag.is_finite() {
        return Err(PidError::PlantZeroGain(mag));
    }
    let kp = theta.cos() / mag;
    let kd = (theta.sin() / mag + ki / omega) / omega;
    Ok(PidGains { kp, ki, kd })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignReport {
    pub loop_gain: f64,
    pub controller_phase: f64,
}

impl DesignReport {
    pub fn satisfies(&self, theta: f64, tol: f64) -> bool {
        (self.loop_gain - 1.0).abs() <= tol && (self.controller_phase - theta).abs() <= tol
    }
}

pub fn verify_design(plant: &TransferFunction, gains: &PidGains, omega: f64) -> Result<DesignReport, PidError> {
    let g = plant.freq_response(omega)?;
    if !(g.norm() > MIN_PLANT_GAIN) {
        return Err(PidError::PlantZeroGain(g.norm()));
    }
    let d = gains.response(omega);
    Ok(DesignReport {
        loop_gain: (d * g).norm(),
        controller_phase: d.arg(),
    })
}

/// Outcome of the full design workflow on a continuous plant.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub omega: f64,
    /// `|G_w(j omega)|` of the w-plane plant.
    pub plant_magnitude: f64,
    pub gains: PidGains,
    pub w_plane: TransferFunction,
}

/// Discretizes `plant` with a ZOH at `sample_time`, moves it to the w-plane
/// and designs there according to `spec`.
pub fn design(plant: &TransferFunction, sample_time: f64, spec: &DesignSpec) -> Result<Design, PidError> {
    spec.validate()?;
    let w_plane = w_transform(&c2d_zoh(plant, sample_time)?)?;
    let gains_at = |omega: f64| -> Result<(PidGains, f64), PidError> {
        let mag = w_plane.freq_response(omega)?.norm();
        let ki = match spec.ki {
            KiChoice::Fixed { ki } => ki,
            KiChoice::Proportional { divisor } => spec.theta.cos() / mag * omega / divisor,
        };
        Ok((gains_for_magnitude(mag, omega, spec.theta, ki)?, mag))
    };
    let omega = match spec.crossover {
        Crossover::Heuristic => crossover_from_rise_time(spec.rise_time)?,
        Crossover::Fixed { omega } => omega,
        Crossover::MatchRiseTime => {
            match_rise_time(plant, sample_time, spec.rise_time, &|w| gains_at(w).map(|g| g.0))?
        }
    };
    let (gains, plant_magnitude) = gains_at(omega)?;
    Ok(Design {
        omega,
        plant_magnitude,
        gains,
        w_plane,
    })
}

const SEARCH_SHRINK: f64 = 0.95;
const SEARCH_MAX_STEPS: usize = 200;
const SEARCH_BISECTIONS: usize = 60;

/// Steps down from `1.8 / tr` until the closed loop rises slower than `tr`,
/// then bisects the boundary. Returns the fast side of it.
fn match_rise_time(
    plant: &TransferFunction,
    sample_time: f64,
    rise_time: f64,
    gains_at: &dyn Fn(f64) -> Result<PidGains, PidError>,
) -> Result<f64, PidError> {
    let samples = (120.0 * rise_time / sample_time).round() as usize + 1;
    let fast_enough = |omega: f64| -> Result<bool, PidError> {
        let gains = gains_at(omega)?;
        let y = closed_loop_step(plant, &gains, sample_time, samples)?;
        if y.iter().any(|v| !v.is_finite()) {
            return Ok(false);
        }
        let ts = TimeSeries::from_input(sample_time, vec![1.0; samples])?;
        let ts = TimeSeries::new(ts.t().to_vec(), ts.u().to_vec(), y)?;
        Ok(matches!(step_metrics(&ts), Ok(m) if m.rise_time_10_90 <= rise_time))
    };
    let start = crossover_from_rise_time(rise_time)?;
    let mut omega = start;
    let mut fast = None;
    let mut slow = None;
    for _ in 0..SEARCH_MAX_STEPS {
        if fast_enough(omega)? {
            fast = Some(omega);
        } else if fast.is_some() {
            slow = Some(omega);
            break;
        }
        omega *= SEARCH_SHRINK;
    }
    let (Some(mut hi), Some(mut lo)) = (fast, slow) else {
        return Err(PidError::SearchFailed(start));
    };
    for _ in 0..SEARCH_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if fast_enough(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Unit-step response of the sampled unity-feedback loop around `plant`
/// with a [`DigitalPid`] in the forward path and no actuator limits.
pub fn closed_loop_step(
    plant: &TransferFunction,
    gains: &PidGains,
    sample_time: f64,
    samples: usize,
) -> Result<Vec<f64>, PidError> {
    let mut pid = discretize_pid(*gains, sample_time)?;
    let mut p = SampledPlant::new(plant, sample_time)?;
    if p.delay() == 0 && p.has_feedthrough() {
        return Err(PidError::Lti(LtiError::ImproperSystem { num: 1, den: 1 }));
    }
    Ok((0..samples)
        .map(|_| {
            let y = p.output();
            p.step(pid.step(1.0 - y));
            y
        })
        .collect())
}

/// Discrete PID with trapezoidal integral, backward-difference derivative
/// on the error, and conditional-integration anti-windup.
#[derive(Debug, Clone, PartialEq)]
pub struct DigitalPid {
    gains: PidGains,
    sample_time: f64,
    limits: Option<(f64, f64)>,
    integral: f64,
    prev_error: f64,
}

pub fn discretize_pid(gains: PidGains, sample_time: f64) -> Result<DigitalPid, PidError> {
    DigitalPid::new(gains, sample_time)
}

impl DigitalPid {
    pub fn new(gains: PidGains, sample_time: f64) -> Result<Self, PidError> {
        if !(sample_time > 0.0) || !sample_time.is_finite() {
            return Err(PidError::NonpositiveSampleTime(sample_time));
        }
        Ok(Self {
            gains,
            sample_time,
            limits: None,
            integral: 0.0,
            prev_error: 0.0,
        })
    }

    pub fn with_limits(mut self, min: f64, max: f64) -> Result<Self, PidError> {
        if !(min < max) {
            return Err(PidError::InvalidLimits(min, max));
        }
        self.limits = Some((min, max));
        Ok(self)
    }

    pub fn gains(&self) -> PidGains {
        self.gains
    }

    pub fn sample_time(&self) -> f64 {
        self.sample_time
    }

    pub fn limits(&self) -> Option<(f64, f64)> {
        self.limits
    }

    /// One control period. The accumulator is left untouched on any step
    /// whose output is clamped.
    pub fn step(&mut self, error: f64) -> f64 {
        let PidGains { kp, ki, kd } = self.gains;
        let t = self.sample_time;
        let integral = self.integral + 0.5 * ki * t * (error + self.prev_error);
        let raw = kp * error + integral + kd / t * (error - self.prev_error);
        self.prev_error = error;
        match self.limits {
            Some((lo, hi)) if raw < lo || raw > hi => raw.clamp(lo, hi),
            _ => {
                self.integral = integral;
                raw
            }
        }
    }

    pub fn reset(&mut self) {
        self.integral = 0.0;
        self.prev_error = 0.0;
    }

    /// `D(z)` as a rational function of `z`, ignoring limits.
    pub fn transfer_function(&self) -> Result<DiscreteTransferFunction, PidError> {
        let PidGains { kp, ki, kd } = self.gains;
        let t = self.sample_time;
        let h = 0.5 * ki * t;
        let r = kd / t;
        // Kp z(z-1) + h z(z+1) + r (z-1)^2 over z(z-1)
        let num = [kp + h + r, -kp + h - 2.0 * r, r];
        Ok(DiscreteTransferFunction::new(&num, &[1.0, -1.0, 0.0], t, 0)?)
    }

    /// The trapezoidal integral branch `(Ki T/2)(z+1)/(z-1)` on its own.
    pub fn integral_term(&self) -> Result<DiscreteTransferFunction, PidError> {
        let h = 0.5 * self.gains.ki * self.sample_time;
        Ok(DiscreteTransferFunction::new(&[h, h], &[1.0, -1.0], self.sample_time, 0)?)
    }
}
