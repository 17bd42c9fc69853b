use serde::{Deserialize, Serialize};

use crate::sysid::prbs;

/// Reference, disturbance or excitation waveform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum Signal {
    #[default]
    Zero,
    Step {
        amplitude: f64,
        #[serde(default)]
        at: f64,
    },
    /// `amplitude` on `[start, stop)`, zero elsewhere.
    Pulse { amplitude: f64, start: f64, stop: f64 },
    Ramp {
        slope: f64,
        #[serde(default)]
        at: f64,
    },
    Sine { amplitude: f64, frequency: f64 },
    /// 11-bit maximal-length sequence of `±amplitude`.
    Prbs {
        amplitude: f64,
        #[serde(default = "one")]
        hold: usize,
    },
}

fn one() -> usize {
    1
}

impl Signal {
    pub fn samples(&self, n: usize, sample_time: f64) -> Vec<f64> {
        let time = |k: usize| k as f64 * sample_time;
        // onsets are compared with half a sample of slack against rounding
        let reached = |k: usize, at: f64| time(k) >= at - 0.5 * sample_time;
        match *self {
            Signal::Zero => vec![0.0; n],
            Signal::Step { amplitude, at } => (0..n).map(|k| if reached(k, at) { amplitude } else { 0.0 }).collect(),
            Signal::Pulse { amplitude, start, stop } => (0..n)
                .map(|k| if reached(k, start) && !reached(k, stop) { amplitude } else { 0.0 })
                .collect(),
            Signal::Ramp { slope, at } => (0..n).map(|k| if reached(k, at) { slope * (time(k) - at) } else { 0.0 }).collect(),
            Signal::Sine { amplitude, frequency } => (0..n)
                .map(|k| amplitude * (2.0 * std::f64::consts::PI * frequency * time(k)).sin())
                .collect(),
            Signal::Prbs { amplitude, hold } => prbs(n, hold).into_iter().map(|v| amplitude * v).collect(),
        }
    }
}
