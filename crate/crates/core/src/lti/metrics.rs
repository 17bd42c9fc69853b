use super::{LtiError, TimeSeries};

/// Step-response summary. Times are measured from the first sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepMetrics {
    pub rise_time_10_90: f64,
    /// `(peak - steady) / (steady - initial)`, clamped at 0.
    pub overshoot: f64,
    pub settling_time_2pct: f64,
    pub steady_state: f64,
}

/// Rise, overshoot and settling of a step experiment's `y` column.
///
/// Steady state is the mean of the final 10% of samples, which must all lie
/// within 2% of the step size around it. Level crossings are linearly
/// interpolated between samples. A record that never moves reports zero
/// rise and overshoot.
pub fn step_metrics(response: &TimeSeries) -> Result<StepMetrics, LtiError> {
    let t = response.t();
    let y = response.y();
    let n = y.len();
    let tail = (n / 10).max(1);
    let steady = y[n - tail..].iter().sum::<f64>() / tail as f64;
    let initial = y[0];
    let span = steady - initial;
    let band = 0.02 * span.abs();

    if span.abs() <= f64::EPSILON * steady.abs().max(1.0) {
        if y.iter().all(|&v| (v - initial).abs() <= f64::EPSILON * initial.abs().max(1.0)) {
            return Ok(StepMetrics {
                rise_time_10_90: 0.0,
                overshoot: 0.0,
                settling_time_2pct: 0.0,
                steady_state: steady,
            });
        }
        return Err(LtiError::NotSettled);
    }
    if y[n - tail..].iter().any(|&v| (v - steady).abs() > band) {
        return Err(LtiError::NotSettled);
    }

    // progress in [0, 1] toward steady state, sign-independent
    let progress = |i: usize| (y[i] - initial) / span;
    let crossing = |level: f64| -> f64 {
        let i = (0..n).find(|&i| progress(i) >= level).unwrap_or(n - 1);
        if i == 0 {
            return t[0];
        }
        let (p0, p1) = (progress(i - 1), progress(i));
        t[i - 1] + (level - p0) / (p1 - p0) * (t[i] - t[i - 1])
    };
    let rise = crossing(0.9) - crossing(0.1);
    let peak = (0..n).map(progress).fold(f64::NEG_INFINITY, f64::max);
    let overshoot = (peak - 1.0).max(0.0);
    let settling = match (0..n).rev().find(|&i| (y[i] - steady).abs() > band) {
        Some(i) if i + 1 < n => t[i + 1] - t[0],
        Some(_) => t[n - 1] - t[0],
        None => 0.0,
    };
    Ok(StepMetrics {
        rise_time_10_90: rise,
        overshoot,
        settling_time_2pct: settling,
        steady_state: steady,
    })
}
