//! Dense univariate polynomials with coefficients in ascending order.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::scalar::Scalar;

pub fn eval<T: Scalar>(coeffs: &[T], x: T) -> T {
    coeffs.iter().rev().fold(T::zero(), |acc, &c| acc * x + c)
}

pub fn eval_complex<T: Scalar>(coeffs: &[T], z: Complex<T>) -> Complex<T> {
    coeffs
        .iter()
        .rev()
        .fold(Complex::new(T::zero(), T::zero()), |acc, &c| acc * z + c)
}

pub fn mul<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![T::zero(); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `a += scale * z^shift * b`, growing `a` as needed.
pub fn axpy_shifted<T: Scalar>(a: &mut Vec<T>, scale: T, shift: usize, b: &[T]) {
    if a.len() < b.len() + shift {
        a.resize(b.len() + shift, T::zero());
    }
    for (k, &x) in b.iter().enumerate() {
        a[k + shift] += scale * x;
    }
}

/// Index of the highest nonzero coefficient, `None` for the zero polynomial.
pub fn degree<T: Scalar>(coeffs: &[T]) -> Option<usize> {
    coeffs.iter().rposition(|c| !c.is_zero())
}

/// Roots via eigenvalues of the companion matrix, computed in `f64`.
///
/// Leading and trailing zero coefficients are stripped first (trailing zeros
/// contribute roots at the origin, which are returned explicitly), and the
/// variable is rescaled so the extreme coefficients have equal magnitude, which
/// keeps the companion matrix reasonably balanced for coefficient sequences
/// spanning many decades.
pub fn roots(coeffs: &[f64]) -> Vec<Complex<f64>> {
    let Some(deg) = coeffs.iter().rposition(|c| *c != 0.0) else {
        return Vec::new();
    };
    let low = coeffs.iter().position(|c| *c != 0.0).unwrap();
    let mut out = vec![Complex::new(0.0, 0.0); low];
    let c = &coeffs[low..=deg];
    let n = c.len() - 1;
    if n == 0 {
        return out;
    }
    // x = rho * u  =>  sum c_k rho^k u^k
    let rho = (c[0].abs() / c[n].abs()).powf(1.0 / n as f64);
    let scaled: Vec<f64> = c
        .iter()
        .enumerate()
        .map(|(k, &ck)| ck * rho.powi(k as i32))
        .collect();
    let lead = scaled[n];
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        m[(i, n - 1)] = -scaled[i] / lead;
    }
    out.extend(m.complex_eigenvalues().iter().map(|u| u * rho));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horner_and_product() {
        let p = [1.0, 2.0, 3.0];
        assert_eq!(eval(&p, 2.0), 17.0);
        assert_eq!(mul(&[1.0, 1.0], &[1.0, -1.0]), vec![1.0, 0.0, -1.0]);
        let z = Complex::new(0.0, 1.0);
        assert_eq!(eval_complex(&p, z), Complex::new(-2.0, 2.0));
    }

    #[test]
    fn roots_of_badly_scaled_polynomial() {
        // (w - 1e-6)(w - 1e6) w
        let c = [0.0, 1.0, -(1e6 + 1e-6), 1.0];
        let mut r: Vec<f64> = roots(&c).iter().map(|z| z.re).collect();
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(r[0], 0.0);
        assert!((r[1] - 1e-6).abs() < 1e-15);
        assert!((r[2] - 1e6).abs() < 1e-6);
    }

    #[test]
    fn degree_ignores_trailing_zeros() {
        assert_eq!(degree(&[1.0, 0.0, 2.0, 0.0]), Some(2));
        assert_eq!(degree::<f64>(&[0.0, 0.0]), None);
    }
}
