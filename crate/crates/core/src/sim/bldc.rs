use serde::{Deserialize, Serialize};

use super::SimError;
use crate::lti::{LtiError, Simulate, TransferFunction};
use crate::sysid::OperatingPoint;

/// Monotone piecewise-linear steady-state speed versus average voltage,
/// flat beyond the last knee.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMap", into = "RawMap")]
pub struct BldcMap {
    knees: Vec<(f64, f64)>,
    source_voltage: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMap {
    /// `[voltage, speed]` pairs.
    knees: Vec<[f64; 2]>,
    source_voltage: f64,
}

impl TryFrom<RawMap> for BldcMap {
    type Error = SimError;

    fn try_from(raw: RawMap) -> Result<Self, SimError> {
        let knees: Vec<(f64, f64)> = raw.knees.iter().map(|k| (k[0], k[1])).collect();
        BldcMap::new(&knees, raw.source_voltage)
    }
}

impl From<BldcMap> for RawMap {
    fn from(m: BldcMap) -> Self {
        RawMap {
            knees: m.knees.iter().map(|&(v, s)| [v, s]).collect(),
            source_voltage: m.source_voltage,
        }
    }
}

impl Default for BldcMap {
    fn default() -> Self {
        Self {
            knees: vec![(11.0, 1.0), (28.0, 4.0)],
            source_voltage: 48.0,
        }
    }
}

impl BldcMap {
    pub fn new(knees: &[(f64, f64)], source_voltage: f64) -> Result<Self, SimError> {
        let bad = |why: &str| Err(SimError::InvalidMap(why.to_string()));
        if knees.len() < 2 {
            return bad("at least two knee points are required");
        }
        if knees.iter().any(|(v, s)| !v.is_finite() || !s.is_finite()) {
            return bad("knee points must be finite");
        }
        if knees.windows(2).any(|w| w[1].0 <= w[0].0) {
            return bad("knee voltages must be strictly increasing");
        }
        if knees.windows(2).any(|w| w[1].1 < w[0].1) {
            return bad("knee speeds must be non-decreasing");
        }
        if !(source_voltage > 0.0) || !source_voltage.is_finite() {
            return bad("source voltage must be positive");
        }
        Ok(Self {
            knees: knees.to_vec(),
            source_voltage,
        })
    }

    pub fn knees(&self) -> &[(f64, f64)] {
        &self.knees
    }

    pub fn source_voltage(&self) -> f64 {
        self.source_voltage
    }

    /// Map value with the first segment extended below the first knee.
    pub fn speed_extended(&self, voltage: f64) -> f64 {
        let last = self.knees[self.knees.len() - 1];
        if voltage >= last.0 {
            return last.1;
        }
        let i = self.segment(voltage);
        let (a, b) = (self.knees[i], self.knees[i + 1]);
        a.1 + (voltage - a.0) * (b.1 - a.1) / (b.0 - a.0)
    }

    /// Slope of the segment containing `voltage`; 0 in saturation.
    pub fn slope_at(&self, voltage: f64) -> f64 {
        if voltage >= self.knees[self.knees.len() - 1].0 {
            return 0.0;
        }
        let i = self.segment(voltage);
        let (a, b) = (self.knees[i], self.knees[i + 1]);
        (b.1 - a.1) / (b.0 - a.0)
    }

    fn segment(&self, voltage: f64) -> usize {
        let n = self.knees.len();
        (0..n - 1).rfind(|&i| voltage >= self.knees[i].0).unwrap_or(0)
    }
}

pub fn duty_to_voltage(duty: f64, source_voltage: f64) -> Result<f64, SimError> {
    if !(0.0..=1.0).contains(&duty) {
        return Err(SimError::DutyOutOfRange(duty));
    }
    Ok(duty * source_voltage)
}

pub fn bldc_static(map: &BldcMap, voltage: f64) -> Result<f64, SimError> {
    if !(voltage >= 0.0) {
        return Err(SimError::NegativeVoltage(voltage));
    }
    Ok(map.speed_extended(voltage))
}

/// Static map followed by the linear plant, in deviation variables.
///
/// The map output is rescaled by its slope at the operating point so that
/// small signals see exactly the plant's own gain.
#[derive(Debug, Clone, PartialEq)]
pub struct Hammerstein {
    pub map: BldcMap,
    pub plant: TransferFunction,
    pub operating_point: OperatingPoint,
}

impl Hammerstein {
    /// Plant input for a deviation voltage `du`.
    pub fn shape(&self, du: f64) -> f64 {
        let v0 = self.operating_point.voltage;
        let slope = self.map.slope_at(v0);
        if slope == 0.0 {
            return 0.0;
        }
        (self.map.speed_extended(v0 + du) - self.map.speed_extended(v0)) / slope
    }
}

impl Simulate for Hammerstein {
    fn simulate_samples(&self, input: &[f64], sample_time: f64) -> Result<Vec<f64>, LtiError> {
        let shaped: Vec<f64> = input.iter().map(|&u| self.shape(u)).collect();
        self.plant.simulate_samples(&shaped, sample_time)
    }
}
