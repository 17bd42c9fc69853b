use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::LtiError;

/// SISO state-space realization `x' = Ax + Bu`, `y = Cx + Du`, plus an
/// input dead time.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub dead_time: f64,
}

impl StateSpace {
    /// Controllable canonical form of a proper `num/den` with monic `den`.
    ///
    /// The first row of `A` holds `-a_1 .. -a_n`, ones sit on the
    /// subdiagonal, `B = e_1`, and `C` holds the remainder numerator after
    /// removing the feedthrough `D = b_0`.
    pub(crate) fn controllable_canonical(num: &[f64], den: &[f64], dead_time: f64) -> Self {
        let n = den.len() - 1;
        let num = super::poly::pad_to(num, n + 1);
        let d0 = num[0];
        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut b = DMatrix::<f64>::zeros(n, 1);
        let mut c = DMatrix::<f64>::zeros(1, n);
        for j in 0..n {
            a[(0, j)] = -den[j + 1];
            c[(0, j)] = num[j + 1] - d0 * den[j + 1];
        }
        for i in 1..n {
            a[(i, i - 1)] = 1.0;
        }
        if n > 0 {
            b[(0, 0)] = 1.0;
        }
        Self {
            a,
            b,
            c,
            d: DMatrix::from_element(1, 1, d0),
            dead_time,
        }
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    /// `C (sI - A)^-1 B + D` at a complex point, delay excluded.
    pub fn transfer_at(&self, s: Complex64) -> Complex64 {
        let n = self.order();
        if n == 0 {
            return Complex64::new(self.d[(0, 0)], 0.0);
        }
        let a = self.a.map(|v| Complex64::new(v, 0.0));
        let m = DMatrix::<Complex64>::identity(n, n) * s - a;
        let b = DVector::<Complex64>::from_iterator(n, self.b.column(0).iter().map(|&v| v.into()));
        let x = m
            .lu()
            .solve(&b)
            .unwrap_or_else(|| DVector::from_element(n, Complex64::new(f64::NAN, f64::NAN)));
        let cx: Complex64 = self
            .c
            .row(0)
            .iter()
            .zip(x.iter())
            .map(|(&ci, &xi)| xi * ci)
            .sum();
        cx + self.d[(0, 0)]
    }

    /// Exact zero-order-hold discretization of the rational part through the
    /// matrix exponential of the augmented block `[[A, B], [0, 0]] * T`.
    ///
    /// Returns `(Ad, Bd)`.
    pub fn zoh_matrices(&self, sample_time: f64) -> Result<(DMatrix<f64>, DMatrix<f64>), LtiError> {
        if !(sample_time > 0.0) || !sample_time.is_finite() {
            return Err(LtiError::NonpositiveSampleTime(sample_time));
        }
        let n = self.order();
        let m = self.b.ncols();
        let mut aug = DMatrix::<f64>::zeros(n + m, n + m);
        aug.view_mut((0, 0), (n, n)).copy_from(&(&self.a * sample_time));
        aug.view_mut((0, n), (n, m)).copy_from(&(&self.b * sample_time));
        let e = aug.exp();
        Ok((
            e.view((0, 0), (n, n)).into_owned(),
            e.view((0, n), (n, m)).into_owned(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::super::{poly, TransferFunction};
    use super::*;

    #[test]
    fn first_order_canonical() {
        let ss = TransferFunction::new(&[1.0], &[1.0, 1.0], 0.0).unwrap().to_state_space();
        assert_eq!(ss.a[(0, 0)], -1.0);
        assert_eq!(ss.b[(0, 0)], 1.0);
        assert_eq!(ss.c[(0, 0)], 1.0);
        assert_eq!(ss.d[(0, 0)], 0.0);
    }

    #[test]
    fn paper_plant_characteristic_polynomial() {
        let g = TransferFunction::new(&[1.0, 2.8], &[1.0, 5.44, 2.2], 0.3).unwrap();
        let ss = g.to_state_space();
        assert_eq!(ss.order(), 2);
        // det(sI - A) for the 2x2 companion, expanded by hand:
        // (s + 5.44) s - (-2.2)(1) = s^2 + 5.44 s + 2.2
        let a = &ss.a;
        let trace = a[(0, 0)] + a[(1, 1)];
        let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
        assert!((-trace - 5.44).abs() < 1e-15);
        assert!((det - 2.2).abs() < 1e-15);
        let cp = poly::char_poly(a);
        assert!((cp[1] - 5.44).abs() < 1e-13 && (cp[2] - 2.2).abs() < 1e-13);
        assert_eq!(ss.dead_time, 0.3);
    }

    #[test]
    fn biproper_feedthrough() {
        // (s+1)/(s+2) = 1 - 1/(s+2)
        let ss = TransferFunction::new(&[1.0, 1.0], &[1.0, 2.0], 0.0).unwrap().to_state_space();
        assert_eq!(ss.d[(0, 0)], 1.0);
        assert_eq!(ss.c[(0, 0)], -1.0);
        assert_eq!(ss.a[(0, 0)], -2.0);
    }

    #[test]
    fn realization_matches_transfer_function() {
        let g = TransferFunction::new(&[2.0, -1.0, 3.0], &[1.0, 4.0, 6.0, 5.0], 0.0).unwrap();
        let ss = g.to_state_space();
        for k in 0..16 {
            let w = 10f64.powf(-2.0 + 4.0 * k as f64 / 15.0);
            let s = Complex64::new(0.0, w);
            let want = g.freq_response(w).unwrap();
            let got = ss.transfer_at(s);
            assert!((want - got).norm() <= 1e-8 * want.norm(), "w={w}");
        }
    }

    #[test]
    fn zoh_first_order_closed_form() {
        let ss = TransferFunction::new(&[1.0], &[1.0, 1.0], 0.0).unwrap().to_state_space();
        let (ad, bd) = ss.zoh_matrices(0.1).unwrap();
        let e = (-0.1f64).exp();
        assert!((ad[(0, 0)] - e).abs() < 1e-15);
        assert!((bd[(0, 0)] - (1.0 - e)).abs() < 1e-15);
        assert!(matches!(ss.zoh_matrices(0.0), Err(LtiError::NonpositiveSampleTime(_))));
    }
}
