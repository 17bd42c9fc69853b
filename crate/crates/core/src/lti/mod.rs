//! Linear time-invariant systems with dead time: continuous and discrete
//! transfer functions, state-space realization, discretization, frequency
//! response, sampled simulation and step metrics.

mod discrete;
mod metrics;
pub mod poly;
mod simulate;
mod state_space;
mod tf;
mod timeseries;

pub use discrete::{c2d_tustin, c2d_zoh, w_transform, DiscreteTransferFunction};
pub use metrics::{step_metrics, StepMetrics};
pub use simulate::{simulate, SampledPlant, Simulate};
pub use state_space::StateSpace;
pub use tf::{wrap_phase, TransferFunction};
pub use timeseries::TimeSeries;

/// Highest polynomial order accepted anywhere in this module.
pub const MAX_ORDER: usize = 10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LtiError {
    #[error("numerator degree {num} exceeds denominator degree {den}")]
    ImproperSystem { num: usize, den: usize },
    #[error("denominator is empty or has a zero leading coefficient")]
    ZeroDenominator,
    #[error("dead time must be non-negative, got {0}")]
    NegativeDeadTime(f64),
    #[error("system order {0} exceeds the supported maximum of {MAX_ORDER}")]
    OrderTooHigh(usize),
    #[error("coefficients must be finite")]
    NonFinite,
    #[error("frequency must be non-negative, got {0}")]
    NegativeFrequency(f64),
    #[error("evaluation at a pole on the imaginary axis (omega = {0})")]
    PoleOnAxis(f64),
    #[error("sample time must be positive, got {0}")]
    NonpositiveSampleTime(f64),
    #[error("dead time {dead_time} s is not an integer multiple of the sample time {sample_time} s")]
    FractionalDelay { dead_time: f64, sample_time: f64 },
    #[error("continuous pole at s = 2/T makes the bilinear map singular")]
    BilinearSingularity,
    #[error("system sample time {system} s does not match signal sample time {signal} s")]
    SampleTimeMismatch { system: f64, signal: f64 },
    #[error("time series columns have different lengths")]
    LengthMismatch,
    #[error("time series needs at least two samples")]
    TooFewSamples,
    #[error("time stamps are not uniformly spaced (sample {index})")]
    NonUniformSampling { index: usize },
    #[error("response has not settled: last 10% of samples leave the 2% band")]
    NotSettled,
    #[error("csv: {0}")]
    Csv(String),
}
