use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use trike_core::kinematics::KinematicsError;
use trike_core::lti::{LtiError, TransferFunction};
use trike_core::pid::{design, Crossover, DesignSpec, KiChoice, PidError, PidGains};
use trike_core::sim::{BldcMap, LoopKind, Scenario, Signal, SteeringPlant, TrajectoryConfig};
use trike_core::sysid::{LinearityConfig, OperatingPoint, SysIdError};

use crate::CliError;

pub const SCHEMA: u32 = 1;

/// The shipped configuration, also used when `--config` is absent.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    pub plant: PlantConfig,
    pub sample_time: f64,
    pub design: DesignConfig,
    /// Fixed velocity-loop gains; `null` designs them from `design`.
    pub gains: Option<PidGains>,
    pub scenario: ScenarioConfig,
    pub operating_point: OperatingPoint,
    pub bldc: BldcMap,
    pub steering: SteeringPlant,
    pub trajectory: TrajectoryConfig,
    pub identify: IdentifyConfig,
    pub linearity: LinearityScanConfig,
}

/// `gain * num(s) / den(s) * exp(-dead_time s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
    pub gain: f64,
    pub dead_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    pub rise_time: f64,
    /// Signed controller phase at crossover, degrees; negative is lag.
    pub theta_deg: f64,
    pub crossover: Crossover,
    pub ki: KiChoice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(rename = "loop")]
    pub loop_kind: LoopKind,
    pub duration: f64,
    pub reference: Signal,
    #[serde(default)]
    pub disturbance: Signal,
    /// Duty-cycle bounds, or `null` for an unconstrained actuator.
    pub actuator_limits: Option<[f64; 2]>,
    #[serde(default)]
    pub bypass_map: bool,
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentifyConfig {
    pub zeros: usize,
    pub poles: usize,
    /// `null` estimates the delay from the data.
    pub dead_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearityScanConfig {
    pub f0: f64,
    pub cycles: usize,
    pub threshold: f64,
    pub amplitudes: Vec<f64>,
}

/// Parses `text`, applies `key=value` overrides and the seed, then validates.
pub fn load(text: &str, overrides: &[String], seed: Option<u64>) -> Result<RunConfig, CliError> {
    let mut doc: Value = serde_json::from_str(text).map_err(|e| CliError::config("<document>", e.to_string()))?;
    for item in overrides {
        apply_override(&mut doc, item)?;
    }
    if let Some(seed) = seed {
        set_path(&mut doc, "scenario.seed", Value::from(seed))?;
    }
    let cfg: RunConfig = serde_path_to_error::deserialize(doc).map_err(|e| {
        let path = e.path().to_string();
        CliError::config(&path, e.into_inner().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_file(path: Option<&Path>, overrides: &[String], seed: Option<u64>) -> Result<RunConfig, CliError> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(format!("{}: {e}", p.display())))?;
            load(&text, overrides, seed)
        }
        None => load(DEFAULT_CONFIG, overrides, seed),
    }
}

fn apply_override(doc: &mut Value, item: &str) -> Result<(), CliError> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::config(item, "override must look like key=value"))?;
    // bare words that are not JSON are taken as strings
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    set_path(doc, key.trim(), value)
}

fn set_path(doc: &mut Value, key: &str, value: Value) -> Result<(), CliError> {
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        node = match node {
            Value::Object(map) => {
                if last {
                    map.insert(part.to_string(), value);
                    return Ok(());
                }
                map.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let slot = part
                    .parse::<usize>()
                    .ok()
                    .and_then(|idx| items.get_mut(idx))
                    .ok_or_else(|| CliError::config(key, format!("`{part}` is not an index of this array")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(CliError::config(key, format!("`{part}` is below a scalar value"))),
        };
    }
    Err(CliError::config(key, "empty override key"))
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema != SCHEMA {
            return Err(CliError::config("schema", format!("unsupported schema {}, expected {SCHEMA}", self.schema)));
        }
        if !(self.sample_time > 0.0) || !self.sample_time.is_finite() {
            return Err(CliError::config("sample_time", format!("must be positive, got {}", self.sample_time)));
        }
        self.plant()?;
        self.design_spec().validate().map_err(|e| CliError::config(design_key(&e), e.to_string()))?;
        if let Some(g) = self.gains {
            if ![g.kp, g.ki, g.kd].iter().all(|v| v.is_finite()) {
                return Err(CliError::config("gains", "gains must be finite"));
            }
        }
        self.validate_scenario()?;
        self.steering
            .validate()
            .map_err(|e| CliError::config("steering", e.to_string()))?;
        self.trajectory
            .geometry
            .validate()
            .map_err(|e| CliError::config("trajectory.geometry", e.to_string()))?;
        if !(self.trajectory.horizon > 0.0) {
            let e = KinematicsError::HorizonNonpositive(self.trajectory.horizon);
            return Err(CliError::config("trajectory.horizon", e.to_string()));
        }
        let id = self.identify;
        if id.poles == 0 || id.zeros > id.poles {
            return Err(CliError::config("identify", "need at least one pole and no more zeros than poles"));
        }
        if let Some(d) = id.dead_time {
            if !(d >= 0.0) {
                return Err(CliError::config("identify.dead_time", format!("must be non-negative, got {d}")));
            }
        }
        let lin = &self.linearity;
        if !(lin.threshold > 0.0 && lin.threshold <= 1.0) {
            return Err(CliError::config("linearity.threshold", format!("must lie in (0, 1], got {}", lin.threshold)));
        }
        if lin.amplitudes.is_empty()
            || lin.amplitudes.iter().any(|a| !(*a > 0.0) || !a.is_finite())
            || lin.amplitudes.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(CliError::config("linearity.amplitudes", "amplitudes must be positive and increasing"));
        }
        self.linearity_config().record_layout().map_err(|e| match e {
            SysIdError::BinMisalignment { .. } => CliError::config("linearity.f0", e.to_string()),
            other => CliError::config("linearity", other.to_string()),
        })?;
        Ok(())
    }

    fn validate_scenario(&self) -> Result<(), CliError> {
        let s = &self.scenario;
        if !(s.duration >= 10.0 * self.sample_time) || !s.duration.is_finite() {
            return Err(CliError::config("scenario.duration", format!("must cover at least ten samples, got {}", s.duration)));
        }
        if let Some([lo, hi]) = s.actuator_limits {
            if !(0.0 <= lo && lo < hi && hi <= 1.0) {
                return Err(CliError::config(
                    "scenario.actuator_limits",
                    format!("[{lo}, {hi}] must satisfy 0 <= min < max <= 1"),
                ));
            }
        }
        if !(s.noise_std >= 0.0) || !s.noise_std.is_finite() {
            return Err(CliError::config("scenario.noise_std", format!("must be non-negative, got {}", s.noise_std)));
        }
        Ok(())
    }

    /// The scaled velocity plant.
    pub fn plant(&self) -> Result<TransferFunction, CliError> {
        let p = &self.plant;
        if p.den.iter().all(|&c| c == 0.0) {
            return Err(CliError::config("plant.den", "denominator has no nonzero coefficient"));
        }
        if p.num.iter().all(|&c| c == 0.0) {
            return Err(CliError::config("plant.num", "numerator has no nonzero coefficient"));
        }
        if !(p.gain.is_finite() && p.gain != 0.0) {
            return Err(CliError::config("plant.gain", format!("must be finite and nonzero, got {}", p.gain)));
        }
        let ratio = p.dead_time / self.sample_time;
        if !(p.dead_time >= 0.0) || (ratio - ratio.round()).abs() > 1e-6 {
            return Err(CliError::config(
                "plant.dead_time",
                format!("must be a non-negative multiple of sample_time, got {}", p.dead_time),
            ));
        }
        let num: Vec<f64> = p.num.iter().map(|c| c * p.gain).collect();
        let g = TransferFunction::new(&num, &p.den, p.dead_time).map_err(|e| {
            let key = match e {
                LtiError::ImproperSystem { .. } => "plant.num",
                _ => "plant.den",
            };
            CliError::config(key, e.to_string())
        })?;
        if g.poles().iter().any(|s| s.re >= 0.0) {
            return Err(CliError::config("plant.den", "velocity plant must be stable"));
        }
        Ok(g)
    }

    pub fn design_spec(&self) -> DesignSpec {
        DesignSpec {
            rise_time: self.design.rise_time,
            theta: self.design.theta_deg.to_radians(),
            crossover: self.design.crossover,
            ki: self.design.ki,
        }
    }

    /// Configured gains, or the designed ones when none are fixed.
    pub fn resolved_gains(&self) -> Result<PidGains, CliError> {
        match self.gains {
            Some(g) => Ok(g),
            None => Ok(design(&self.plant()?, self.sample_time, &self.design_spec())
                .map_err(CliError::from_pid)?
                .gains),
        }
    }

    pub fn scenario_for(&self, loop_kind: LoopKind) -> Result<Scenario, CliError> {
        let s = &self.scenario;
        let gains = match loop_kind {
            LoopKind::Steering => self.trajectory.steering_gains,
            _ => self.resolved_gains()?,
        };
        Ok(Scenario {
            loop_kind,
            plant: self.plant()?,
            gains,
            sample_time: self.sample_time,
            duration: s.duration,
            reference: s.reference,
            disturbance: s.disturbance,
            actuator_limits: s.actuator_limits.map(|[lo, hi]| (lo, hi)),
            operating_point: self.operating_point,
            bldc: self.bldc.clone(),
            bypass_map: s.bypass_map,
            noise_std: s.noise_std,
            seed: s.seed,
        })
    }

    pub fn linearity_config(&self) -> LinearityConfig {
        LinearityConfig {
            f0: self.linearity.f0,
            sample_time: self.sample_time,
            cycles: self.linearity.cycles,
            threshold: self.linearity.threshold,
        }
    }

    /// Pretty JSON with every number at 9 significant digits.
    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        round_numbers(&mut v);
        let mut text = serde_json::to_string_pretty(&v).expect("config serializes");
        text.push('\n');
        text
    }
}

fn design_key(e: &PidError) -> &'static str {
    match e {
        PidError::NonpositiveRiseTime(_) => "design.rise_time",
        PidError::ThetaOutOfRange(_) => "design.theta_deg",
        PidError::NonpositiveCrossover(_) => "design.crossover.omega",
        PidError::NegativeKi(_) => "design.ki",
        _ => "design",
    }
}

fn round_numbers(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or_default();
            let rounded: f64 = trike_core::numfmt::sig9(x).parse().unwrap_or(x);
            if let Some(m) = serde_json::Number::from_f64(rounded) {
                *n = m;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_numbers),
        Value::Object(map) => map.values_mut().for_each(round_numbers),
        _ => {}
    }
}
