//! Dense real polynomials stored with coefficients in descending degree.
//!
//! `[1.0, 5.44, 2.2]` is `s^2 + 5.44 s + 2.2`. The empty slice is treated as
//! the zero polynomial.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Degree of `p`, ignoring nothing: callers trim first if they need to.
pub fn degree(p: &[f64]) -> usize {
    p.len().saturating_sub(1)
}

/// Horner evaluation at a real point.
pub fn eval(p: &[f64], x: f64) -> f64 {
    p.iter().fold(0.0, |acc, &c| acc * x + c)
}

/// Horner evaluation at a complex point.
pub fn eval_complex(p: &[f64], z: Complex64) -> Complex64 {
    p.iter()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// Drops leading coefficients whose magnitude is at most `tol` times the
/// largest coefficient. Always leaves at least one coefficient.
pub fn trim_leading(p: &[f64], tol: f64) -> Vec<f64> {
    let scale = p.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    let first = p
        .iter()
        .position(|c| c.abs() > tol * scale)
        .unwrap_or(p.len().saturating_sub(1));
    if p.is_empty() {
        vec![0.0]
    } else {
        p[first..].to_vec()
    }
}

pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return vec![0.0];
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Sum with right alignment (constant terms line up).
pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    let mut out = vec![0.0; n];
    for (i, &x) in a.iter().rev().enumerate() {
        out[n - 1 - i] += x;
    }
    for (i, &x) in b.iter().rev().enumerate() {
        out[n - 1 - i] += x;
    }
    out
}

pub fn scale(p: &[f64], k: f64) -> Vec<f64> {
    p.iter().map(|c| c * k).collect()
}

/// Pads `p` on the left with zeros to `len` coefficients.
pub fn pad_to(p: &[f64], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len.saturating_sub(p.len())];
    out.extend_from_slice(p);
    out
}

/// `(lead * x + constant)^n`.
pub fn linear_pow(lead: f64, constant: f64, n: usize) -> Vec<f64> {
    (0..n).fold(vec![1.0], |acc, _| mul(&acc, &[lead, constant]))
}

/// Substitutes `x = (a1 y + a0) / (b1 y + b0)` into `p` and clears the
/// denominator with `(b1 y + b0)^order`, where `order >= degree(p)`.
///
/// Returns `sum_i p_i (a1 y + a0)^i (b1 y + b0)^(order - i)` in descending
/// powers of `y`, `order + 1` coefficients long.
pub fn mobius_substitute(p: &[f64], a: (f64, f64), b: (f64, f64), order: usize) -> Vec<f64> {
    let deg = degree(p);
    assert!(order >= deg, "mobius order below polynomial degree");
    let mut out = vec![0.0; order + 1];
    for (k, &c) in p.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let power = deg - k;
        let term = mul(
            &linear_pow(a.0, a.1, power),
            &linear_pow(b.0, b.1, order - power),
        );
        for (o, t) in out.iter_mut().zip(term.iter()) {
            *o += c * t;
        }
    }
    out
}

/// Roots from the eigenvalues of the companion matrix.
pub fn roots(p: &[f64]) -> Vec<Complex64> {
    let p = trim_leading(p, 0.0);
    let n = degree(&p);
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![Complex64::new(-p[1] / p[0], 0.0)];
    }
    let lead = p[0];
    let mut companion = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        companion[(0, j)] = -p[j + 1] / lead;
    }
    for i in 1..n {
        companion[(i, i - 1)] = 1.0;
    }
    companion
        .complex_eigenvalues()
        .iter()
        .copied()
        .collect()
}

/// Monic polynomial with the given roots. Imaginary residue from conjugate
/// pairs is discarded.
pub fn from_roots(roots: &[Complex64]) -> Vec<f64> {
    let mut acc = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
        for (i, &c) in acc.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * r;
        }
        acc = next;
    }
    acc.iter().map(|c| c.re).collect()
}

/// Characteristic polynomial `det(zI - M)` by Faddeev-LeVerrier. Monic,
/// `n + 1` coefficients.
pub fn char_poly(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut coeffs = vec![1.0; 1];
    let mut mk = DMatrix::<f64>::zeros(n, n);
    let identity = DMatrix::<f64>::identity(n, n);
    for k in 1..=n {
        let c_prev = *coeffs.last().unwrap();
        mk = m * &mk + &identity * c_prev;
        let c = -(m * &mk).trace() / k as f64;
        coeffs.push(c);
    }
    coeffs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_and_mul() {
        let p = mul(&[1.0, 0.44], &[1.0, 5.0]);
        assert!((p[1] - 5.44).abs() < 1e-15);
        assert!((p[2] - 2.2).abs() < 1e-15);
        assert_eq!(eval(&p, 0.0), p[2]);
    }

    #[test]
    fn add_aligns_constants() {
        assert_eq!(add(&[1.0, 2.0, 3.0], &[10.0]), vec![1.0, 2.0, 13.0]);
    }

    #[test]
    fn roots_round_trip() {
        let p = [1.0, 5.44, 2.2];
        let mut r: Vec<f64> = roots(&p).iter().map(|z| z.re).collect();
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((r[0] + 5.0).abs() < 1e-12);
        assert!((r[1] + 0.44).abs() < 1e-12);
        let back = from_roots(&roots(&p));
        for (a, b) in back.iter().zip(p.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn char_poly_of_companion() {
        let m = DMatrix::from_row_slice(2, 2, &[-5.44, -2.2, 1.0, 0.0]);
        let c = char_poly(&m);
        assert!((c[1] - 5.44).abs() < 1e-12 && (c[2] - 2.2).abs() < 1e-12);
    }

    #[test]
    fn mobius_of_constant() {
        // constant 3 times (y + 1)^2
        let out = mobius_substitute(&[3.0], (1.0, -1.0), (1.0, 1.0), 2);
        assert_eq!(out, vec![3.0, 6.0, 3.0]);
    }
}
