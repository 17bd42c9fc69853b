use std::io::Write;

use rustfft::{num_complex::Complex, FftPlanner};

use super::SysIdError;
use crate::lti::Simulate;
use crate::numfmt::sig9;

/// One-sided power spectrum; `power` sums to the mean square of the signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub frequency: Vec<f64>,
    pub power: Vec<f64>,
}

pub const MIN_SPECTRUM_LEN: usize = 16;

pub fn power_spectrum(signal: &[f64], sample_time: f64) -> Result<Spectrum, SysIdError> {
    let n = signal.len();
    if n < MIN_SPECTRUM_LEN {
        return Err(SysIdError::TooShort {
            needed: MIN_SPECTRUM_LEN,
            got: n,
        });
    }
    let mut buf: Vec<Complex<f64>> = signal.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let norm = 1.0 / (n as f64 * n as f64);
    let bins = n / 2 + 1;
    let power = (0..bins)
        .map(|k| {
            let p = buf[k].norm_sqr() * norm;
            // positive and negative frequencies fold, except DC and Nyquist
            if k == 0 || (n.is_multiple_of(2) && k == n / 2) {
                p
            } else {
                2.0 * p
            }
        })
        .collect();
    let df = 1.0 / (n as f64 * sample_time);
    Ok(Spectrum {
        frequency: (0..bins).map(|k| k as f64 * df).collect(),
        power,
    })
}

/// Number of bins carrying non-negligible input power.
pub(crate) fn excited_bins(u: &[f64], sample_time: f64) -> Result<usize, SysIdError> {
    let s = power_spectrum(u, sample_time)?;
    let peak = s.power.iter().fold(0.0_f64, |m, &p| m.max(p));
    Ok(s.power.iter().filter(|&&p| p > 1e-10 * peak).count())
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearityConfig {
    /// Excitation frequency, Hz.
    pub f0: f64,
    pub sample_time: f64,
    /// Whole periods in the analyzed window.
    pub cycles: usize,
    /// Minimum fundamental power fraction for a linear verdict.
    pub threshold: f64,
}

impl Default for LinearityConfig {
    fn default() -> Self {
        Self {
            f0: 0.125,
            sample_time: 0.05,
            cycles: 8,
            threshold: 0.95,
        }
    }
}

impl LinearityConfig {
    /// Samples in the analyzed window, `cycles / (f0 T)`; errors unless it
    /// is an integer, which puts `f0` exactly on DFT bin `cycles`.
    pub fn analyzed_samples(&self) -> Result<usize, SysIdError> {
        let fits = |cycles: usize| {
            let n = cycles as f64 / (self.f0 * self.sample_time);
            let rounded = n.round();
            (n.is_finite() && rounded >= 1.0 && (n - rounded).abs() <= 1e-9 * rounded).then_some(rounded as usize)
        };
        if self.cycles > 0 {
            if let Some(n) = fits(self.cycles) {
                return Ok(n);
            }
        }
        let cycles = self.cycles.max(1);
        let aligned = (cycles..cycles + MAX_EXTRA_CYCLES).find(|&c| fits(c).is_some()).unwrap_or(cycles);
        let samples = (cycles as f64 / (self.f0 * self.sample_time)).round().max(1.0);
        Err(SysIdError::BinMisalignment {
            f0: self.f0,
            sample_time: self.sample_time,
            window: aligned as f64 / self.f0,
            cycles: aligned,
            frequency: cycles as f64 / (samples * self.sample_time),
        })
    }

    /// `(discarded, analyzed)` sample counts; the discard is 20% of the whole.
    pub fn record_layout(&self) -> Result<(usize, usize), SysIdError> {
        let analyzed = self.analyzed_samples()?;
        Ok(((analyzed as f64 / 4.0).round() as usize, analyzed))
    }
}

/// Search span when suggesting an aligned cycle count.
const MAX_EXTRA_CYCLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearityRow {
    pub amplitude: f64,
    /// Power at `f0` over all non-DC power.
    pub fundamental_power: f64,
    /// `sqrt(sum of harmonic powers / fundamental power)`.
    pub distortion: f64,
    pub linear: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearityReport {
    pub rows: Vec<LinearityRow>,
    pub threshold: f64,
    /// Largest amplitude up to which every row is linear; 0 if none.
    pub linear_range: f64,
}

impl LinearityReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), std::io::Error> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["amplitude", "fundamental_power", "distortion", "verdict"])?;
        for r in &self.rows {
            let verdict = if r.linear { "linear" } else { "nonlinear" };
            w.write_record([sig9(r.amplitude), sig9(r.fundamental_power), sig9(r.distortion), verdict.to_string()])?;
        }
        w.flush()
    }
}

/// Drives `sys` with `A sin(2 pi f0 t)` for each amplitude and measures how
/// much output power stays at `f0` once the transient is dropped.
pub fn linearity_scan<S: Simulate + ?Sized>(
    sys: &S,
    cfg: &LinearityConfig,
    amplitudes: &[f64],
) -> Result<LinearityReport, SysIdError> {
    if amplitudes.is_empty()
        || amplitudes.iter().any(|&a| !(a > 0.0) || !a.is_finite())
        || amplitudes.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(SysIdError::BadAmplitudes);
    }
    if !(cfg.threshold > 0.0 && cfg.threshold <= 1.0) {
        return Err(SysIdError::BadThreshold(cfg.threshold));
    }
    let (discard, analyzed) = cfg.record_layout()?;
    let t = cfg.sample_time;
    let w0 = 2.0 * std::f64::consts::PI * cfg.f0 * t;
    let unit: Vec<f64> = (0..discard + analyzed).map(|k| (w0 * k as f64).sin()).collect();

    let mut rows = Vec::with_capacity(amplitudes.len());
    for &amplitude in amplitudes {
        let u: Vec<f64> = unit.iter().map(|v| amplitude * v).collect();
        let y = sys.simulate_samples(&u, t)?;
        let s = power_spectrum(&y[discard..], t)?;
        let ac: f64 = s.power[1..].iter().sum();
        let fundamental = s.power[cfg.cycles];
        let harmonics: f64 = (2..)
            .map(|h| h * cfg.cycles)
            .take_while(|&k| k < s.power.len())
            .map(|k| s.power[k])
            .sum();
        let fundamental_power = if ac > 0.0 { fundamental / ac } else { 0.0 };
        let distortion = if fundamental > 0.0 { (harmonics / fundamental).sqrt() } else { 0.0 };
        rows.push(LinearityRow {
            amplitude,
            fundamental_power,
            distortion,
            linear: fundamental_power >= cfg.threshold,
        });
    }
    let linear_range = rows.iter().take_while(|r| r.linear).last().map_or(0.0, |r| r.amplitude);
    Ok(LinearityReport {
        rows,
        threshold: cfg.threshold,
        linear_range,
    })
}
