//! Identification of a continuous plant with dead time from sampled
//! input/output records, and the sinusoidal linearity test.
//!
//! Estimation runs on deviation variables about the experiment's operating
//! point. A discrete ARX-structured model is fitted by least squares and then
//! refined with instrumental variables whose instruments are the current
//! model simulated noise-free on the input; each refinement prefilters
//! signals and instruments by the current denominator. The discrete model is
//! carried to continuous time through `s = ln(z)/T` on the poles and a
//! least-squares fit of the ZOH numerator basis.

mod spectrum;

pub use spectrum::{linearity_scan, power_spectrum, LinearityConfig, LinearityReport, LinearityRow, Spectrum};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::lti::{c2d_zoh, poly, DiscreteTransferFunction, LtiError, Simulate, TimeSeries, TransferFunction, MAX_ORDER};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SysIdError {
    #[error("input carries too little excitation to identify the model")]
    InsufficientExcitation,
    #[error("instrumental-variable normal matrix is singular")]
    SingularRegression,
    #[error("need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("unsupported orders: {zeros} zeros, {poles} poles")]
    InvalidOrders { zeros: usize, poles: usize },
    #[error("discrete pole {0} on the negative real axis has no continuous equivalent")]
    NoContinuousEquivalent(Complex64),
    #[error(
        "{f0} Hz does not fit a whole number of samples in its analysis window at T = {sample_time} s; \
         nearest aligned window is {window} s ({cycles} periods), or use {} Hz",
        crate::numfmt::sig9(*.frequency)
    )]
    BinMisalignment {
        f0: f64,
        sample_time: f64,
        /// Aligned analysis window for the same frequency, seconds.
        window: f64,
        cycles: usize,
        /// Aligned frequency for the configured cycle count, Hz.
        frequency: f64,
    },
    #[error("amplitudes must be positive and strictly ascending")]
    BadAmplitudes,
    #[error("threshold must lie in (0, 1], got {0}")]
    BadThreshold(f64),
    #[error(transparent)]
    Lti(#[from] LtiError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatingPoint {
    pub voltage: f64,
    pub speed: f64,
}

impl Default for OperatingPoint {
    fn default() -> Self {
        Self {
            voltage: 11.0,
            speed: 1.0,
        }
    }
}

/// A recorded experiment in absolute units (`u` in V, `y` in m/s).
#[derive(Debug, Clone, PartialEq)]
pub struct IdExperiment {
    data: TimeSeries,
    operating_point: OperatingPoint,
}

impl IdExperiment {
    pub fn new(data: TimeSeries, operating_point: OperatingPoint) -> Result<Self, SysIdError> {
        let u = data.u();
        let first = u[0];
        if u.iter().all(|&v| (v - first).abs() <= 1e-12 * first.abs().max(1.0)) {
            return Err(SysIdError::InsufficientExcitation);
        }
        Ok(Self {
            data,
            operating_point,
        })
    }

    pub fn data(&self) -> &TimeSeries {
        &self.data
    }

    pub fn operating_point(&self) -> OperatingPoint {
        self.operating_point
    }

    pub fn sample_time(&self) -> f64 {
        self.data.sample_time()
    }

    /// `(u - V_op, y - v_op)`.
    pub fn deviations(&self) -> (Vec<f64>, Vec<f64>) {
        let op = self.operating_point;
        (
            self.data.u().iter().map(|v| v - op.voltage).collect(),
            self.data.y().iter().map(|v| v - op.speed).collect(),
        )
    }
}

/// Residual autocorrelation over lags `1..=lags` against the 95% band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Whiteness {
    pub lags: usize,
    pub max_abs_autocorrelation: f64,
    pub bound: f64,
    pub fraction_outside: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentifiedModel {
    pub model: TransferFunction,
    pub discrete: DiscreteTransferFunction,
    /// `1 - rms(y - y_hat) / rms(y - mean y)` on the validation tail.
    pub fit: f64,
    pub residual_whiteness: Whiteness,
    /// False when a discrete pole lies on or outside the unit circle.
    pub stable: bool,
}

/// Fraction of the record used for estimation; the rest validates.
pub const ESTIMATION_FRACTION: f64 = 0.7;
const REFINEMENTS: usize = 2;
const WHITENESS_LAGS: usize = 20;

/// Maximal-length 11-bit PRBS of `±1`, each bit held for `hold` samples.
pub fn prbs(len: usize, hold: usize) -> Vec<f64> {
    let hold = hold.max(1);
    let mut state: u16 = 0x5a5;
    let mut out = Vec::with_capacity(len);
    while out.len() < len {
        // x^11 + x^9 + 1
        let bit = ((state >> 10) ^ (state >> 8)) & 1;
        state = ((state << 1) | bit) & 0x7ff;
        let v = if state & 1 == 1 { 1.0 } else { -1.0 };
        out.extend(std::iter::repeat_n(v, hold.min(len - out.len())));
    }
    out
}

/// Dead time in seconds; see [`estimate_delay_samples`].
pub fn estimate_delay(data: &IdExperiment) -> Result<f64, SysIdError> {
    Ok(estimate_delay_samples(data)? as f64 * data.sample_time())
}

/// Delay from the lag maximizing `|corr(du, dy)|` of the differenced
/// deviation signals, less the one-sample latency of a strictly proper
/// sampled plant, floored at zero.
///
/// Meant for open-loop records; feedback correlates the signals at every
/// lag, so closed-loop data needs a known dead time.
pub fn estimate_delay_samples(data: &IdExperiment) -> Result<usize, SysIdError> {
    let (u, y) = data.deviations();
    let du: Vec<f64> = u.windows(2).map(|w| w[1] - w[0]).collect();
    let dy: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let scale = u.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
    if du.iter().all(|d| d.abs() <= 1e-12 * scale) {
        return Err(SysIdError::InsufficientExcitation);
    }
    let max_lag = du.len() / 2;
    let mut best = (0usize, f64::NEG_INFINITY);
    for lag in 0..=max_lag {
        let r: f64 = du.iter().zip(&dy[lag..]).map(|(a, b)| a * b).sum();
        if r.abs() > best.1 {
            best = (lag, r.abs());
        }
    }
    Ok(best.0.saturating_sub(1))
}

/// Identifies `nz` zeros, `np` poles and the given dead time.
pub fn identify_iv(data: &IdExperiment, nz: usize, np: usize, dead_time: f64) -> Result<IdentifiedModel, SysIdError> {
    if np == 0 || nz > np || np > MAX_ORDER {
        return Err(SysIdError::InvalidOrders { zeros: nz, poles: np });
    }
    let t = data.sample_time();
    let delay = delay_from(dead_time, t)?;
    let (u, y) = data.deviations();
    let n = u.len();
    let needed = (20 * (np + nz)).max(delay + np + 2) * 10 / 7 + 1;
    if n < needed {
        return Err(SysIdError::TooShort { needed, got: n });
    }
    let excited = spectrum::excited_bins(&u, t)?;
    if excited < np + nz + 1 {
        return Err(SysIdError::InsufficientExcitation);
    }

    let split = (n as f64 * ESTIMATION_FRACTION).round() as usize;
    let structure = Structure {
        na: np,
        nb: if nz == np { np + 1 } else { np },
        lead: if nz == np { 0 } else { 1 },
        delay,
    };
    let (ue, ye) = (&u[..split], &y[..split]);
    let mut theta = structure.least_squares(ue, ye)?;
    for _ in 0..REFINEMENTS {
        theta = structure.refine(ue, ye, &theta)?;
    }
    let (a, b) = structure.polynomials(&theta);
    let discrete = DiscreteTransferFunction::new(&b, &a, t, delay)?;
    let stable = discrete.poles().iter().all(|p| p.norm() < 1.0);
    let model = to_continuous(&discrete, nz, delay as f64 * t)?;

    let y_hat = model.simulate_samples(&u, t)?;
    let (fit, residual_whiteness) = validate(&y[split..], &y_hat[split..]);
    Ok(IdentifiedModel {
        model,
        discrete,
        fit,
        residual_whiteness,
        stable,
    })
}

fn delay_from(dead_time: f64, sample_time: f64) -> Result<usize, SysIdError> {
    if !(dead_time >= 0.0) {
        return Err(LtiError::NegativeDeadTime(dead_time).into());
    }
    let ratio = dead_time / sample_time;
    if (ratio - ratio.round()).abs() > 1e-2 {
        return Err(LtiError::FractionalDelay {
            dead_time,
            sample_time,
        }
        .into());
    }
    Ok(ratio.round() as usize)
}

/// Regression `y[k] = -sum a_i y[k-i] + sum b_j u[k-delay-lead-j]`.
struct Structure {
    na: usize,
    nb: usize,
    /// 0 when a direct `b_0` term is estimated, 1 otherwise.
    lead: usize,
    delay: usize,
}

impl Structure {
    fn first_row(&self) -> usize {
        self.na.max(self.delay + self.lead + self.nb - 1)
    }

    fn rows(&self, y: &[f64], u: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
        let start = self.first_row();
        let m = y.len() - start;
        let p = self.na + self.nb;
        let mut phi = DMatrix::zeros(m, p);
        let mut target = DVector::zeros(m);
        for (r, k) in (start..y.len()).enumerate() {
            for i in 0..self.na {
                phi[(r, i)] = -y[k - 1 - i];
            }
            for j in 0..self.nb {
                phi[(r, self.na + j)] = u[k - self.delay - self.lead - j];
            }
            target[r] = y[k];
        }
        (phi, target)
    }

    fn least_squares(&self, u: &[f64], y: &[f64]) -> Result<Vec<f64>, SysIdError> {
        let (phi, target) = self.rows(y, u);
        let svd = phi.svd(true, true);
        let smax = svd.singular_values.max();
        if !(svd.singular_values.min() > 1e-12 * smax) {
            return Err(SysIdError::InsufficientExcitation);
        }
        let theta = svd.solve(&target, 0.0).map_err(|_| SysIdError::SingularRegression)?;
        Ok(theta.iter().copied().collect())
    }

    fn polynomials(&self, theta: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut a = vec![1.0];
        a.extend_from_slice(&theta[..self.na]);
        // numerator in descending powers of z over a degree-na denominator
        let mut b = vec![0.0; self.na + 1];
        for j in 0..self.nb {
            b[self.lead + j] = theta[self.na + j];
        }
        (a, b)
    }

    fn refine(&self, u: &[f64], y: &[f64], theta: &[f64]) -> Result<Vec<f64>, SysIdError> {
        let (a, b) = self.polynomials(theta);
        let a = stabilize(&a);
        let mut b_delayed = vec![0.0; self.delay];
        b_delayed.extend_from_slice(&b);
        let x = filter(&b_delayed, &a, u);
        let yf = filter(&[1.0], &a, y);
        let uf = filter(&[1.0], &a, u);
        let xf = filter(&[1.0], &a, &x);
        let (phi, target) = self.rows(&yf, &uf);
        let (zeta, _) = self.rows(&xf, &uf);
        // zeta' phi theta = zeta' y, solved through zeta = QR so the condition
        // number of phi is not squared
        let q = zeta.qr().q();
        let square = q.transpose() * &phi;
        let rhs = q.transpose() * target;
        let sv = square.singular_values();
        if !(sv.min() > 1e-12 * sv.max()) {
            return Err(SysIdError::SingularRegression);
        }
        let theta = square.lu().solve(&rhs).ok_or(SysIdError::SingularRegression)?;
        Ok(theta.iter().copied().collect())
    }
}

/// Reflects roots outside the unit circle to their conjugate reciprocals.
fn stabilize(a: &[f64]) -> Vec<f64> {
    let roots = poly::roots(a);
    if roots.iter().all(|r| r.norm() < 1.0) {
        return a.to_vec();
    }
    let reflected: Vec<Complex64> = roots
        .iter()
        .map(|&r| if r.norm() > 1.0 { 1.0 / r.conj() } else { r })
        .collect();
    poly::from_roots(&reflected)
}

/// Direct-form filter `b(q^-1)/a(q^-1)` with monic `a`, zero initial state.
fn filter(b: &[f64], a: &[f64], x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; x.len()];
    for k in 0..x.len() {
        let mut acc = 0.0;
        for (i, &bi) in b.iter().enumerate().take(k + 1) {
            acc += bi * x[k - i];
        }
        for (j, &aj) in a.iter().enumerate().skip(1).take(k) {
            acc -= aj * y[k - j];
        }
        y[k] = acc;
    }
    y
}

/// Continuous model whose ZOH image best matches `discrete`, with poles
/// `ln(z)/T` and the numerator rescaled to the discrete DC gain.
fn to_continuous(discrete: &DiscreteTransferFunction, nz: usize, dead_time: f64) -> Result<TransferFunction, SysIdError> {
    let t = discrete.sample_time();
    let mut poles = Vec::new();
    for p in discrete.poles() {
        if p.im.abs() <= 1e-12 * p.norm() && p.re <= 0.0 {
            return Err(SysIdError::NoContinuousEquivalent(p));
        }
        poles.push(p.ln() / t);
    }
    let den = poly::from_roots(&poles);
    let np = den.len() - 1;
    let target = poly::pad_to(discrete.num(), np + 1);

    let mut basis = DMatrix::zeros(np + 1, nz + 1);
    for i in 0..=nz {
        let mut s_pow = vec![0.0; nz + 1 - i];
        s_pow[0] = 1.0;
        let column = c2d_zoh(&TransferFunction::new(&s_pow, &den, 0.0)?, t)?;
        for (r, c) in poly::pad_to(column.num(), np + 1).into_iter().enumerate() {
            basis[(r, i)] = c;
        }
    }
    let coeffs = basis
        .svd(true, true)
        .solve(&DVector::from_vec(target), 0.0)
        .map_err(|_| SysIdError::SingularRegression)?;
    let mut num: Vec<f64> = coeffs.iter().copied().collect();
    let dc_now = poly::eval(&num, 0.0) / poly::eval(&den, 0.0);
    let dc_want = discrete.dc_gain();
    if dc_now != 0.0 && dc_now.is_finite() && dc_want.is_finite() {
        num = poly::scale(&num, dc_want / dc_now);
    }
    Ok(TransferFunction::new(&num, &den, dead_time)?)
}

fn validate(y: &[f64], y_hat: &[f64]) -> (f64, Whiteness) {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let resid: Vec<f64> = y.iter().zip(y_hat).map(|(a, b)| a - b).collect();
    let rms_err = (resid.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
    let rms_dev = (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let fit = if rms_dev > 0.0 { 1.0 - rms_err / rms_dev } else if rms_err == 0.0 { 1.0 } else { f64::NEG_INFINITY };

    let rmean = resid.iter().sum::<f64>() / n;
    let centered: Vec<f64> = resid.iter().map(|e| e - rmean).collect();
    let r0: f64 = centered.iter().map(|e| e * e).sum();
    let lags = WHITENESS_LAGS.min(centered.len().saturating_sub(1));
    let bound = 1.96 / n.sqrt();
    let (mut max_abs, mut outside) = (0.0_f64, 0usize);
    if r0 > 0.0 {
        for lag in 1..=lags {
            let r = centered.iter().zip(&centered[lag..]).map(|(a, b)| a * b).sum::<f64>() / r0;
            max_abs = max_abs.max(r.abs());
            outside += usize::from(r.abs() > bound);
        }
    }
    let whiteness = Whiteness {
        lags,
        max_abs_autocorrelation: max_abs,
        bound,
        fraction_outside: if lags > 0 { outside as f64 / lags as f64 } else { 0.0 },
    };
    (fit, whiteness)
}
