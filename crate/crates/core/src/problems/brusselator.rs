use std::f64::consts::PI;

use crate::linalg::{JacobianStructure, Matrix};
use crate::scalar::Scalar;

use super::{ErrorNorm, OdeProblem};

/// One-dimensional Brusselator
/// `u_t = alpha + u^2 v - (beta + 1) u + gamma u_xx`,
/// `v_t = beta u - u^2 v + gamma v_xx`
/// with Dirichlet values `u = alpha`, `v = beta / alpha` at both ends, on the `m`
/// interior nodes `x_i = i / (m + 1)`. Unknowns are interleaved
/// `(u_1, v_1, u_2, v_2, ..)`, giving a Jacobian with bandwidth 2.
#[derive(Clone, Debug, PartialEq)]
pub struct Brusselator {
    pub m: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub t_end: f64,
}

impl Default for Brusselator {
    fn default() -> Self {
        Self {
            m: 500,
            alpha: 1.0,
            beta: 3.0,
            gamma: 0.02,
            t_end: 1.0,
        }
    }
}

impl Brusselator {
    pub fn new(m: usize) -> Self {
        assert!(m >= 3, "Brusselator needs m >= 3");
        Self {
            m,
            ..Self::default()
        }
    }

    pub fn dx(&self) -> f64 {
        1.0 / (self.m + 1) as f64
    }

    /// Upper bound `4 gamma / dx^2` for the diffusion eigenvalue magnitudes.
    pub fn diffusion_extent(&self) -> f64 {
        4.0 * self.gamma / (self.dx() * self.dx())
    }

    fn boundary(&self) -> (f64, f64) {
        (self.alpha, self.beta / self.alpha)
    }
}

impl<T: Scalar> OdeProblem<T> for Brusselator {
    fn name(&self) -> String {
        "brusselator".into()
    }

    fn dimension(&self) -> usize {
        2 * self.m
    }

    fn rhs(&self, _t: T, y: &[T], dy: &mut [T]) {
        let m = self.m;
        let (a, b) = (T::lit(self.alpha), T::lit(self.beta));
        let dx = T::lit(self.dx());
        let d = T::lit(self.gamma) / (dx * dx);
        let (ub, vb) = self.boundary();
        let (ub, vb) = (T::lit(ub), T::lit(vb));
        for i in 0..m {
            let (u, v) = (y[2 * i], y[2 * i + 1]);
            let (ul, vl) = if i > 0 { (y[2 * i - 2], y[2 * i - 1]) } else { (ub, vb) };
            let (ur, vr) = if i + 1 < m { (y[2 * i + 2], y[2 * i + 3]) } else { (ub, vb) };
            let uuv = u * u * v;
            dy[2 * i] = a + uuv - (b + T::one()) * u + d * (ul - T::lit(2.0) * u + ur);
            dy[2 * i + 1] = b * u - uuv + d * (vl - T::lit(2.0) * v + vr);
        }
    }

    fn jacobian(&self, _t: T, y: &[T], jac: &mut Matrix<T>) {
        let m = self.m;
        let b = T::lit(self.beta);
        let dx = T::lit(self.dx());
        let d = T::lit(self.gamma) / (dx * dx);
        let two = T::lit(2.0);
        for i in 0..m {
            let (u, v) = (y[2 * i], y[2 * i + 1]);
            let (ku, kv) = (2 * i, 2 * i + 1);
            jac.set(ku, ku, two * u * v - (b + T::one()) - two * d);
            jac.set(ku, kv, u * u);
            jac.set(kv, ku, b - two * u * v);
            jac.set(kv, kv, -u * u - two * d);
            if i > 0 {
                jac.set(ku, ku - 2, d);
                jac.set(kv, kv - 2, d);
            }
            if i + 1 < m {
                jac.set(ku, ku + 2, d);
                jac.set(kv, kv + 2, d);
            }
        }
    }

    fn jacobian_structure(&self) -> JacobianStructure {
        JacobianStructure::Banded { lower: 2, upper: 2 }
    }

    fn initial_value(&self) -> Vec<T> {
        let dx = self.dx();
        let mut y = Vec::with_capacity(2 * self.m);
        for i in 0..self.m {
            let x = (i + 1) as f64 * dx;
            y.push(T::lit(1.0 + (2.0 * PI * x).sin()));
            y.push(T::lit(3.0));
        }
        y
    }

    fn interval(&self) -> (f64, f64) {
        (0.0, self.t_end)
    }

    fn error_norm(&self) -> ErrorNorm {
        ErrorNorm::Max
    }

    fn parameters(&self) -> Vec<(String, f64)> {
        vec![
            ("m".into(), self.m as f64),
            ("alpha".into(), self.alpha),
            ("beta".into(), self.beta),
            ("gamma".into(), self.gamma),
            ("t_end".into(), self.t_end),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::jacobian_fd_defect;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reaction_steady_state_and_block() {
        let p = Brusselator::new(5);
        let y: Vec<f64> = (0..5).flat_map(|_| [1.0, 3.0]).collect();
        let mut dy = vec![0.0; 10];
        p.rhs(0.0, &y, &mut dy);
        assert!(dy.iter().all(|v| v.abs() < 1e-12), "{dy:?}");
        let mut j = Matrix::zeros(OdeProblem::<f64>::jacobian_structure(&p), 10);
        p.jacobian(0.0, &y, &mut j);
        let d = p.gamma / p.dx().powi(2);
        assert!((j.get(4, 4) + 2.0 * d - 2.0).abs() < 1e-12);
        assert_eq!(j.get(4, 5), 1.0);
        assert_eq!(j.get(5, 4), -3.0);
        assert!((j.get(5, 5) + 2.0 * d + 1.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_and_stiffness() {
        let p = Brusselator::default();
        assert_eq!(OdeProblem::<f64>::dimension(&p), 1000);
        assert!((p.diffusion_extent() - 0.08 * 501.0f64.powi(2)).abs() < 1e-6);
    }

    #[test]
    fn jacobian_random_states() {
        let p = Brusselator::new(8);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let y: Vec<f64> = (0..16).map(|_| rng.random_range(0.5..3.5)).collect();
            assert!(jacobian_fd_defect(&p, 0.0, &y) < 1e-6);
        }
    }
}
