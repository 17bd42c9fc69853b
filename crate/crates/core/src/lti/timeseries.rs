use std::io::{Read, Write};

use super::LtiError;
use crate::numfmt::sig9;

/// Uniformly sampled input/output record.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    t: Vec<f64>,
    u: Vec<f64>,
    y: Vec<f64>,
}

/// Relative tolerance on the spacing of consecutive time stamps.
const UNIFORM_TOL: f64 = 1e-9;

impl TimeSeries {
    pub fn new(t: Vec<f64>, u: Vec<f64>, y: Vec<f64>) -> Result<Self, LtiError> {
        if t.len() != u.len() || t.len() != y.len() {
            return Err(LtiError::LengthMismatch);
        }
        if t.len() < 2 {
            return Err(LtiError::TooFewSamples);
        }
        if t.iter().chain(&u).chain(&y).any(|v| !v.is_finite()) {
            return Err(LtiError::NonFinite);
        }
        let step = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
        if !(step > 0.0) {
            return Err(LtiError::NonUniformSampling { index: 1 });
        }
        for (i, w) in t.windows(2).enumerate() {
            let dt = w[1] - w[0];
            if (dt - step).abs() > UNIFORM_TOL * step {
                return Err(LtiError::NonUniformSampling { index: i + 1 });
            }
        }
        Ok(Self { t, u, y })
    }

    /// Input-only series starting at `t = 0`; `y` is zeroed.
    pub fn from_input(sample_time: f64, u: Vec<f64>) -> Result<Self, LtiError> {
        if !(sample_time > 0.0) {
            return Err(LtiError::NonpositiveSampleTime(sample_time));
        }
        let t = (0..u.len()).map(|k| k as f64 * sample_time).collect();
        let y = vec![0.0; u.len()];
        Self::new(t, u, y)
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn sample_time(&self) -> f64 {
        (self.t[self.t.len() - 1] - self.t[0]) / (self.t.len() - 1) as f64
    }

    /// Contiguous sub-range `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self, LtiError> {
        Self::new(
            self.t[start..end].to_vec(),
            self.u[start..end].to_vec(),
            self.y[start..end].to_vec(),
        )
    }

    /// Writes the `t,u,y` CSV schema with 9 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), LtiError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["t", "u", "y"]).map_err(csv_err)?;
        for i in 0..self.len() {
            w.write_record([sig9(self.t[i]), sig9(self.u[i]), sig9(self.y[i])])
                .map_err(csv_err)?;
        }
        w.flush().map_err(|e| LtiError::Csv(e.to_string()))
    }

    /// Reads the `t,u,y` CSV schema; the header must match exactly.
    pub fn read_csv<R: Read>(input: R) -> Result<Self, LtiError> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header = r.headers().map_err(csv_err)?.clone();
        if header.iter().collect::<Vec<_>>() != ["t", "u", "y"] {
            return Err(LtiError::Csv(format!(
                "expected header `t,u,y`, found `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let (mut t, mut u, mut y) = (Vec::new(), Vec::new(), Vec::new());
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let parse = |i: usize| -> Result<f64, LtiError> {
                rec.get(i)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| LtiError::Csv(format!("row {}: bad number in column {}", line + 2, i + 1)))
            };
            t.push(parse(0)?);
            u.push(parse(1)?);
            y.push(parse(2)?);
        }
        Self::new(t, u, y)
    }
}

fn csv_err(e: csv::Error) -> LtiError {
    LtiError::Csv(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert_eq!(
            TimeSeries::new(vec![0.0, 1.0], vec![0.0], vec![0.0, 0.0]),
            Err(LtiError::LengthMismatch)
        );
        assert!(matches!(
            TimeSeries::new(vec![0.0, 1.0, 2.5], vec![0.0; 3], vec![0.0; 3]),
            Err(LtiError::NonUniformSampling { .. })
        ));
        assert!(matches!(
            TimeSeries::new(vec![1.0, 0.0], vec![0.0; 2], vec![0.0; 2]),
            Err(LtiError::NonUniformSampling { .. })
        ));
    }

    #[test]
    fn csv_round_trip_is_byte_stable() {
        let ts = TimeSeries::new(
            (0..50).map(|k| k as f64 * 0.05).collect(),
            (0..50).map(|k| (k as f64 * 0.3).sin()).collect(),
            (0..50).map(|k| (k as f64 * 0.1).cos() / 3.0).collect(),
        )
        .unwrap();
        let mut a = Vec::new();
        ts.write_csv(&mut a).unwrap();
        let text = String::from_utf8(a.clone()).unwrap();
        assert!(text.starts_with("t,u,y\n0,0,0.333333333\n0.05,"));
        assert!(!text.contains('\r'));
        let back = TimeSeries::read_csv(a.as_slice()).unwrap();
        let mut b = Vec::new();
        back.write_csv(&mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_header_checked() {
        let err = TimeSeries::read_csv("time,u,y\n0,0,0\n1,0,0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, LtiError::Csv(_)));
    }
}
