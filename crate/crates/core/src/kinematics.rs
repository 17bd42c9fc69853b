//! Rear-axle differential-drive odometry, curvature and the steering
//! linearization `tan(steer) = omega * horizon`.
//!
//! Yaw rate is `(V_R - V_L) / d`, positive anticlockwise, so that
//! `V_L = V_x - omega d/2` and `V_R = V_x + omega d/2` hold.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::lti::wrap_phase;
use crate::numfmt::sig9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KinematicsError {
    #[error("wheel radius and track width must be positive, got r = {radius}, d = {track}")]
    InvalidGeometry { radius: f64, track: f64 },
    #[error("curvature undefined at forward speed {vx} m/s with yaw rate {omega} rad/s")]
    DegenerateSpeed { vx: f64, omega: f64 },
    #[error("steering horizon must be positive, got {0}")]
    HorizonNonpositive(f64),
    #[error("steer angle {steer} rad exceeds the limit {limit} rad")]
    SteerSaturated { steer: f64, limit: f64 },
    #[error("pose trace: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WheelGeometry {
    pub wheel_radius: f64,
    pub track_width: f64,
}

impl WheelGeometry {
    pub fn new(wheel_radius: f64, track_width: f64) -> Result<Self, KinematicsError> {
        let g = Self {
            wheel_radius,
            track_width,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !ok(self.wheel_radius) || !ok(self.track_width) {
            return Err(KinematicsError::InvalidGeometry {
                radius: self.wheel_radius,
                track: self.track_width,
            });
        }
        Ok(())
    }
}

impl Default for WheelGeometry {
    fn default() -> Self {
        Self {
            wheel_radius: 0.1,
            track_width: 0.4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BodyTwist {
    pub vx: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Wrapped to (-pi, pi].
    pub heading: f64,
}

/// Signed turn radius; `Straight` stands for an infinite radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Radius {
    Finite(f64),
    Straight,
}

impl Radius {
    pub fn finite(self) -> Option<f64> {
        match self {
            Radius::Finite(r) => Some(r),
            Radius::Straight => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureSample {
    pub kappa: f64,
    pub radius: Radius,
}

/// Below this forward speed curvature is undefined.
pub const MIN_SPEED: f64 = 1e-6;

/// Largest steer angle the linearization will produce.
pub const MAX_STEER: f64 = 85.0 * std::f64::consts::PI / 180.0;

pub fn wheel_speeds_to_body(omega_l: f64, omega_r: f64, geom: &WheelGeometry) -> BodyTwist {
    let v_l = geom.wheel_radius * omega_l;
    let v_r = geom.wheel_radius * omega_r;
    BodyTwist {
        vx: 0.5 * (v_l + v_r),
        omega: (v_r - v_l) / geom.track_width,
    }
}

/// Wheel angular velocities `(omega_l, omega_r)` that realize `twist`.
pub fn body_to_wheel_speeds(twist: &BodyTwist, geom: &WheelGeometry) -> (f64, f64) {
    let half = 0.5 * twist.omega * geom.track_width;
    (
        (twist.vx - half) / geom.wheel_radius,
        (twist.vx + half) / geom.wheel_radius,
    )
}

pub fn curvature(twist: &BodyTwist) -> Result<CurvatureSample, KinematicsError> {
    if twist.omega == 0.0 {
        return Ok(CurvatureSample {
            kappa: 0.0,
            radius: Radius::Straight,
        });
    }
    if !(twist.vx.abs() >= MIN_SPEED) {
        return Err(KinematicsError::DegenerateSpeed {
            vx: twist.vx,
            omega: twist.omega,
        });
    }
    Ok(CurvatureSample {
        kappa: twist.omega / twist.vx,
        radius: Radius::Finite(twist.vx / twist.omega),
    })
}

/// Turn radius of the axle midpoint from rear wheel ground speeds.
pub fn radius_from_wheels(v_l: f64, v_r: f64, track_width: f64) -> Radius {
    let diff = v_r - v_l;
    let scale = v_l.abs().max(v_r.abs()).max(f64::MIN_POSITIVE);
    if diff.abs() < 1e-12 * scale {
        return Radius::Straight;
    }
    Radius::Finite(0.5 * track_width * (v_r + v_l) / diff)
}

/// `atan(omega * horizon)`, rejected beyond `limit`.
pub fn steer_angle_ref(omega: f64, horizon: f64, limit: f64) -> Result<f64, KinematicsError> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(KinematicsError::HorizonNonpositive(horizon));
    }
    let steer = (omega * horizon).atan();
    let limit = limit.min(MAX_STEER);
    if steer.abs() > limit {
        return Err(KinematicsError::SteerSaturated { steer, limit });
    }
    Ok(steer)
}

/// Yaw rate produced by an achieved steer angle.
pub fn yaw_rate_from_steer(steer: f64, horizon: f64) -> f64 {
    steer.tan() / horizon
}

/// Advances `pose` along the exact arc traced by a constant twist.
pub fn integrate_pose(pose: &Pose, twist: &BodyTwist, dt: f64) -> Pose {
    let x = twist.omega * dt;
    let (sinc, cosc) = if x.abs() < 1e-4 {
        let x2 = x * x;
        (1.0 - x2 / 6.0 * (1.0 - x2 / 20.0), x / 2.0 * (1.0 - x2 / 12.0 * (1.0 - x2 / 30.0)))
    } else {
        (x.sin() / x, (1.0 - x.cos()) / x)
    };
    let s = twist.vx * dt;
    let (sh, ch) = pose.heading.sin_cos();
    Pose {
        x: pose.x + s * (ch * sinc - sh * cosc),
        y: pose.y + s * (sh * sinc + ch * cosc),
        heading: wrap_phase(pose.heading + x),
    }
}

/// One row of a pose trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseRecord {
    pub t: f64,
    pub pose: Pose,
    pub twist: BodyTwist,
    pub kappa: f64,
    pub steer: f64,
}

/// Writes `t,x,y,heading,vx,omega,kappa,steer` rows, 9 significant digits.
pub fn write_pose_csv<W: Write>(records: &[PoseRecord], out: W) -> Result<(), KinematicsError> {
    let err = |e: csv::Error| KinematicsError::Io(e.to_string());
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["t", "x", "y", "heading", "vx", "omega", "kappa", "steer"])
        .map_err(err)?;
    for r in records {
        let row = [r.t, r.pose.x, r.pose.y, r.pose.heading, r.twist.vx, r.twist.omega, r.kappa, r.steer];
        w.write_record(row.map(sig9)).map_err(err)?;
    }
    w.flush().map_err(|e| KinematicsError::Io(e.to_string()))
}
