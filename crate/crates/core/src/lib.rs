//! Modeling, identification, PID design and closed-loop simulation for a
//! front-steer, front-drive three-wheeled robot.
//!
//! The velocity plant is a second-order-plus-dead-time model identified
//! about the (11 V, 1 m/s) operating point. Controllers are designed in the
//! w-plane of its zero-order-hold equivalent and realized as a discrete PID.

// `!(x > 0.0)` is the idiom that also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod kinematics;
pub mod lti;
pub mod numfmt;
pub mod pid;
pub mod sim;
pub mod sysid;


pub use kinematics::{BodyTwist, CurvatureSample, Pose, WheelGeometry};
pub use lti::{DiscreteTransferFunction, StateSpace, TimeSeries, TransferFunction};
pub use pid::{DesignSpec, DigitalPid, PidGains};
pub use sim::{drive_plant, BldcMap, Scenario, SteeringPlant, TrajectoryConfig};
pub use sysid::{IdExperiment, IdentifiedModel, LinearityReport};
