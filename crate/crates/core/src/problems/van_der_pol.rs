use crate::linalg::Matrix;
use crate::scalar::Scalar;

use super::{ErrorNorm, OdeProblem};

/// `y1' = y2`, `y2' = mu (1 - y1^2) y2 - y1`.
#[derive(Clone, Debug, PartialEq)]
pub struct VanDerPol {
    pub mu: f64,
    pub t_end: f64,
}

impl Default for VanDerPol {
    fn default() -> Self {
        Self {
            mu: 100.0,
            t_end: 10.0,
        }
    }
}

impl<T: Scalar> OdeProblem<T> for VanDerPol {
    fn name(&self) -> String {
        "van-der-pol".into()
    }

    fn dimension(&self) -> usize {
        2
    }

    fn rhs(&self, _t: T, y: &[T], dy: &mut [T]) {
        let mu = T::lit(self.mu);
        dy[0] = y[1];
        dy[1] = mu * (T::one() - y[0] * y[0]) * y[1] - y[0];
    }

    fn jacobian(&self, _t: T, y: &[T], jac: &mut Matrix<T>) {
        let mu = T::lit(self.mu);
        jac.set(0, 1, T::one());
        jac.set(1, 0, -T::lit(2.0) * mu * y[0] * y[1] - T::one());
        jac.set(1, 1, mu * (T::one() - y[0] * y[0]));
    }

    fn initial_value(&self) -> Vec<T> {
        vec![T::lit(2.0), T::zero()]
    }

    fn interval(&self) -> (f64, f64) {
        (0.0, self.t_end)
    }

    fn error_norm(&self) -> ErrorNorm {
        ErrorNorm::Max
    }

    fn parameters(&self) -> Vec<(String, f64)> {
        vec![("mu".into(), self.mu), ("t_end".into(), self.t_end)]
    }

    fn asymptotic_dt_bound(&self) -> Option<f64> {
        (self.mu != 0.0).then(|| 1.0 / self.mu.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::JacobianStructure;
    use crate::problems::jacobian_fd_defect;

    #[test]
    fn values_and_jacobian() {
        let p = VanDerPol::default();
        let mut dy = [0.0; 2];
        p.rhs(0.0, &[2.0, 0.0], &mut dy);
        assert_eq!(dy, [0.0, -2.0]);
        let mut j = Matrix::zeros(JacobianStructure::Dense, 2);
        p.jacobian(0.0, &[2.0, 0.0], &mut j);
        assert_eq!([j.get(0, 0), j.get(0, 1), j.get(1, 0), j.get(1, 1)], [0.0, 1.0, -1.0, -300.0]);
        let h = VanDerPol { mu: 0.0, t_end: 1.0 };
        h.rhs(0.0, &[0.3, -0.7], &mut dy);
        assert_eq!(dy, [-0.7, -0.3]);
        for y in [[2.0, 0.0], [0.5, -1.5], [-1.2, 3.0]] {
            assert!(jacobian_fd_defect(&p, 0.0, &y) < 1e-6);
        }
    }
}
