//! Deterministic closed-loop experiments: the velocity loop around the
//! BLDC drive, the steering servo, and the curvature-tracking trajectory
//! loop built on top of it.
//!
//! Every loop is stepped at the scenario sample time. At each tick the
//! measurement is taken at the start of the period, the controller output
//! is computed and then held over the period.

mod bldc;
mod signal;

pub use bldc::{bldc_static, duty_to_voltage, BldcMap, Hammerstein};
pub use signal::Signal;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::kinematics::{
    body_to_wheel_speeds, curvature, integrate_pose, steer_angle_ref, wheel_speeds_to_body, yaw_rate_from_steer,
    BodyTwist, KinematicsError, Pose, PoseRecord, WheelGeometry, MIN_SPEED,
};
use crate::lti::{LtiError, SampledPlant, Simulate, TimeSeries, TransferFunction};
use crate::pid::{DigitalPid, PidError, PidGains};
use crate::sysid::OperatingPoint;

/// Identified drive dynamics about the operating point, in m/s per volt:
/// `gain (s + 2.8) / ((s + 0.44)(s + 5))` with a 0.3 s transport delay.
///
/// The static gain is `gain * 2.8 / 2.2`. The absolute gain was never
/// published, so it stays a parameter.
pub fn drive_plant(gain: f64) -> Result<TransferFunction, LtiError> {
    TransferFunction::new(&[gain, gain * 2.8], &[1.0, 5.44, 2.2], DRIVE_DEAD_TIME)
}

/// Transport delay of [`drive_plant`], seconds.
pub const DRIVE_DEAD_TIME: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("duty cycle {0} is outside [0, 1]")]
    DutyOutOfRange(f64),
    #[error("average voltage must be non-negative, got {0}")]
    NegativeVoltage(f64),
    #[error("invalid BLDC map: {0}")]
    InvalidMap(String),
    #[error("scenario mismatch: {0}")]
    ConfigMismatch(String),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Lti(#[from] LtiError),
    #[error(transparent)]
    Pid(#[from] PidError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopKind {
    OpenLoop,
    Velocity,
    Steering,
    Trajectory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub loop_kind: LoopKind,
    /// Velocity plant in deviation variables.
    pub plant: TransferFunction,
    /// Controller of the loop being run.
    pub gains: PidGains,
    pub sample_time: f64,
    pub duration: f64,
    /// Deviation from the operating point for the velocity loop; absolute
    /// steer angle for the steering loop.
    pub reference: Signal,
    /// Added to the plant output.
    pub disturbance: Signal,
    /// Duty-cycle bounds; `None` disables clamping and anti-windup.
    pub actuator_limits: Option<(f64, f64)>,
    pub operating_point: OperatingPoint,
    pub bldc: BldcMap,
    /// Feed the controller output straight to the plant.
    pub bypass_map: bool,
    /// Standard deviation of white measurement noise, m/s.
    pub noise_std: f64,
    pub seed: u64,
}

impl Scenario {
    /// Velocity-loop scenario with the default drive and no noise.
    pub fn velocity(plant: TransferFunction, gains: PidGains, sample_time: f64, duration: f64, reference: Signal) -> Self {
        Self {
            loop_kind: LoopKind::Velocity,
            plant,
            gains,
            sample_time,
            duration,
            reference,
            disturbance: Signal::Zero,
            actuator_limits: Some((0.0, 1.0)),
            operating_point: OperatingPoint::default(),
            bldc: BldcMap::default(),
            bypass_map: false,
            noise_std: 0.0,
            seed: 0,
        }
    }

    pub fn samples(&self) -> usize {
        (self.duration / self.sample_time).round() as usize + 1
    }

    fn check(&self, kind: LoopKind) -> Result<(), SimError> {
        let mismatch = |why: String| Err(SimError::ConfigMismatch(why));
        if self.loop_kind != kind {
            return mismatch(format!("scenario is {:?}, runner expects {:?}", self.loop_kind, kind));
        }
        if !(self.sample_time > 0.0) || !self.sample_time.is_finite() {
            return mismatch(format!("sample time must be positive, got {}", self.sample_time));
        }
        if !(self.duration >= 10.0 * self.sample_time) || !self.duration.is_finite() {
            return mismatch(format!("duration {} is shorter than ten samples", self.duration));
        }
        if let Some((lo, hi)) = self.actuator_limits {
            if !(0.0 <= lo && lo < hi && hi <= 1.0) {
                return mismatch(format!("actuator limits ({lo}, {hi}) must satisfy 0 <= min < max <= 1"));
            }
        }
        if !(self.noise_std >= 0.0) || !self.noise_std.is_finite() {
            return mismatch(format!("noise level must be non-negative, got {}", self.noise_std));
        }
        Ok(())
    }
}

/// Velocity-loop record in absolute units.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityTrace {
    pub t: Vec<f64>,
    /// m/s.
    pub reference: Vec<f64>,
    pub duty: Vec<f64>,
    /// V.
    pub voltage: Vec<f64>,
    /// Measured speed, m/s.
    pub speed: Vec<f64>,
}

impl VelocityTrace {
    /// `(t, voltage, speed)`.
    pub fn timeseries(&self) -> Result<TimeSeries, LtiError> {
        TimeSeries::new(self.t.clone(), self.voltage.clone(), self.speed.clone())
    }
}

pub fn run_velocity_loop(scenario: &Scenario) -> Result<VelocityTrace, SimError> {
    scenario.check(LoopKind::Velocity)?;
    let t = scenario.sample_time;
    let n = scenario.samples();
    let op = scenario.operating_point;
    let vs = scenario.bldc.source_voltage();
    let mut pid = DigitalPid::new(scenario.gains, t)?;
    if let Some((lo, hi)) = scenario.actuator_limits {
        pid = pid.with_limits(lo * vs - op.voltage, hi * vs - op.voltage)?;
    }
    let mut plant = SampledPlant::new(&scenario.plant, t)?;
    if plant.delay() == 0 && plant.has_feedthrough() {
        return Err(SimError::ConfigMismatch("velocity plant must be strictly proper or delayed".into()));
    }
    let drive = Hammerstein {
        map: scenario.bldc.clone(),
        plant: scenario.plant.clone(),
        operating_point: op,
    };
    let reference = scenario.reference.samples(n, t);
    let disturbance = scenario.disturbance.samples(n, t);
    let mut noise = noise_source(scenario);

    let mut trace = VelocityTrace {
        t: Vec::with_capacity(n),
        reference: Vec::with_capacity(n),
        duty: Vec::with_capacity(n),
        voltage: Vec::with_capacity(n),
        speed: Vec::with_capacity(n),
    };
    for k in 0..n {
        let measured = plant.output() + disturbance[k] + noise();
        let mut voltage = op.voltage + pid.step(reference[k] - measured);
        if let Some((lo, hi)) = scenario.actuator_limits {
            voltage = voltage.clamp(lo * vs, hi * vs);
        }
        let du = voltage - op.voltage;
        plant.step(if scenario.bypass_map { du } else { drive.shape(du) });
        trace.t.push(k as f64 * t);
        trace.reference.push(op.speed + reference[k]);
        trace.duty.push(voltage / vs);
        trace.voltage.push(voltage);
        trace.speed.push(op.speed + measured);
    }
    Ok(trace)
}

fn noise_source(scenario: &Scenario) -> impl FnMut() -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let dist = Normal::new(0.0, scenario.noise_std).ok();
    let on = scenario.noise_std > 0.0;
    move || match (&dist, on) {
        (Some(d), true) => d.sample(&mut rng),
        _ => 0.0,
    }
}

/// First-order steering actuator with a hard angle limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SteeringPlant {
    pub time_constant: f64,
    pub gain: f64,
    pub steer_limit: f64,
}

impl Default for SteeringPlant {
    fn default() -> Self {
        Self {
            time_constant: 0.2,
            gain: 1.0,
            steer_limit: 0.5,
        }
    }
}

impl SteeringPlant {
    pub fn validate(&self) -> Result<(), SimError> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !ok(self.time_constant) || !ok(self.steer_limit) || !self.gain.is_finite() {
            return Err(SimError::ConfigMismatch(format!(
                "steering plant needs positive time constant and limit, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Exact ZOH stepping of the steering lag, state clamped at the limit.
struct SteeringState {
    pole: f64,
    input_gain: f64,
    limit: f64,
    angle: f64,
}

impl SteeringState {
    fn new(p: &SteeringPlant, sample_time: f64) -> Self {
        let pole = (-sample_time / p.time_constant).exp();
        Self {
            pole,
            input_gain: p.gain * (1.0 - pole),
            limit: p.steer_limit,
            angle: 0.0,
        }
    }

    fn step(&mut self, u: f64) {
        self.angle = (self.pole * self.angle + self.input_gain * u).clamp(-self.limit, self.limit);
    }
}

/// Steering servo; returns `(t, steer reference, steer angle)`.
pub fn run_steering_loop(scenario: &Scenario, steering: &SteeringPlant) -> Result<TimeSeries, SimError> {
    scenario.check(LoopKind::Steering)?;
    steering.validate()?;
    let t = scenario.sample_time;
    let n = scenario.samples();
    let mut pid = DigitalPid::new(scenario.gains, t)?;
    let mut plant = SteeringState::new(steering, t);
    let reference = scenario.reference.samples(n, t);
    let mut angle = Vec::with_capacity(n);
    for &r in &reference {
        angle.push(plant.angle);
        plant.step(pid.step(r - plant.angle));
    }
    Ok(TimeSeries::new((0..n).map(|k| k as f64 * t).collect(), reference, angle)?)
}

/// Outer curvature loop around the steering servo, at constant speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectoryConfig {
    pub curvature_gains: PidGains,
    pub steering_gains: PidGains,
    /// `T` in `tan(steer) = omega T`, s.
    pub horizon: f64,
    /// Forward speed held by the velocity loop, m/s.
    pub speed: f64,
    /// Curvature reference, 1/m.
    pub curvature: Signal,
    pub geometry: WheelGeometry,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            curvature_gains: PidGains::new(1.0, 5.0, 0.0),
            steering_gains: PidGains::new(3.0, 15.0, 0.0),
            horizon: 1.0,
            speed: 1.0,
            curvature: Signal::Step { amplitude: 0.5, at: 0.0 },
            geometry: WheelGeometry::default(),
        }
    }
}

pub fn run_trajectory_loop(
    scenario: &Scenario,
    cfg: &TrajectoryConfig,
    steering: &SteeringPlant,
) -> Result<Vec<PoseRecord>, SimError> {
    scenario.check(LoopKind::Trajectory)?;
    steering.validate()?;
    cfg.geometry.validate()?;
    if !(cfg.horizon > 0.0) {
        return Err(KinematicsError::HorizonNonpositive(cfg.horizon).into());
    }
    if !(cfg.speed.abs() >= MIN_SPEED) {
        return Err(KinematicsError::DegenerateSpeed {
            vx: cfg.speed,
            omega: 0.0,
        }
        .into());
    }
    let t = scenario.sample_time;
    let n = scenario.samples();
    let max_rate = steering.steer_limit.tan() / cfg.horizon;
    let mut curvature_pid = DigitalPid::new(cfg.curvature_gains, t)?.with_limits(-max_rate, max_rate)?;
    let mut steering_pid = DigitalPid::new(cfg.steering_gains, t)?;
    let mut servo = SteeringState::new(steering, t);
    let kappa_ref = cfg.curvature.samples(n, t);

    let mut pose = Pose::default();
    let mut out = Vec::with_capacity(n);
    for (k, &target) in kappa_ref.iter().enumerate() {
        let steer = servo.angle;
        let actual = BodyTwist {
            vx: cfg.speed,
            omega: yaw_rate_from_steer(steer, cfg.horizon),
        };
        let (wl, wr) = body_to_wheel_speeds(&actual, &cfg.geometry);
        let measured = wheel_speeds_to_body(wl, wr, &cfg.geometry);
        let kappa = curvature(&measured)?.kappa;
        out.push(PoseRecord {
            t: k as f64 * t,
            pose,
            twist: measured,
            kappa,
            steer,
        });

        let omega_ref = curvature_pid.step(target - kappa);
        let steer_ref = match steer_angle_ref(omega_ref, cfg.horizon, steering.steer_limit) {
            Ok(s) => s,
            Err(KinematicsError::SteerSaturated { steer, limit }) => steer.clamp(-limit, limit),
            Err(e) => return Err(e.into()),
        };
        servo.step(steering_pid.step(steer_ref - steer));
        pose = integrate_pose(&pose, &actual, t);
    }
    Ok(out)
}

/// Open-loop response of `plant` to `input`, both in deviation variables.
pub fn open_loop_experiment(
    plant: &TransferFunction,
    input: &Signal,
    sample_time: f64,
    duration: f64,
) -> Result<TimeSeries, SimError> {
    let n = (duration / sample_time).round() as usize + 1;
    let u = input.samples(n, sample_time);
    let y = plant.simulate_samples(&u, sample_time)?;
    Ok(TimeSeries::new((0..n).map(|k| k as f64 * sample_time).collect(), u, y)?)
}

/// Open-loop drive experiment in absolute units: `reference` is the voltage
/// deviation applied through the BLDC map, and the record is
/// `(t, voltage, measured speed)`.
pub fn run_open_loop(scenario: &Scenario) -> Result<TimeSeries, SimError> {
    scenario.check(LoopKind::OpenLoop)?;
    let t = scenario.sample_time;
    let n = scenario.samples();
    let op = scenario.operating_point;
    let vs = scenario.bldc.source_voltage();
    let mut du = scenario.reference.samples(n, t);
    if let Some((lo, hi)) = scenario.actuator_limits {
        for v in &mut du {
            *v = (op.voltage + *v).clamp(lo * vs, hi * vs) - op.voltage;
        }
    }
    let y = if scenario.bypass_map {
        scenario.plant.simulate_samples(&du, t)?
    } else {
        let drive = Hammerstein {
            map: scenario.bldc.clone(),
            plant: scenario.plant.clone(),
            operating_point: op,
        };
        drive.simulate_samples(&du, t)?
    };
    let disturbance = scenario.disturbance.samples(n, t);
    let mut noise = noise_source(scenario);
    let speed = y.iter().zip(&disturbance).map(|(y, d)| op.speed + y + d + noise()).collect();
    let voltage = du.iter().map(|v| op.voltage + v).collect();
    Ok(TimeSeries::new((0..n).map(|k| k as f64 * t).collect(), voltage, speed)?)
}
