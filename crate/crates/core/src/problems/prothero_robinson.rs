use crate::linalg::Matrix;
use crate::scalar::Scalar;

use super::{ErrorNorm, OdeProblem};

/// `y' = mu (y - g) + g'` with `g(t) = exp(-t) cos(20 t) + sin(10 t)`; the
/// exact solution is `y = g`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProtheroRobinson {
    pub mu: f64,
    pub t_end: f64,
}

impl Default for ProtheroRobinson {
    fn default() -> Self {
        Self {
            mu: -100.0,
            t_end: 10.0,
        }
    }
}

impl ProtheroRobinson {
    pub fn g<T: Scalar>(t: T) -> T {
        (-t).exp() * (T::lit(20.0) * t).cos() + (T::lit(10.0) * t).sin()
    }

    pub fn g_prime<T: Scalar>(t: T) -> T {
        let e = (-t).exp();
        let w = T::lit(20.0) * t;
        -e * w.cos() - T::lit(20.0) * e * w.sin() + T::lit(10.0) * (T::lit(10.0) * t).cos()
    }
}

impl<T: Scalar> OdeProblem<T> for ProtheroRobinson {
    fn name(&self) -> String {
        "prothero-robinson".into()
    }

    fn dimension(&self) -> usize {
        1
    }

    fn rhs(&self, t: T, y: &[T], dy: &mut [T]) {
        dy[0] = T::lit(self.mu) * (y[0] - Self::g(t)) + Self::g_prime(t);
    }

    fn jacobian(&self, _t: T, _y: &[T], jac: &mut Matrix<T>) {
        jac.set(0, 0, T::lit(self.mu));
    }

    fn initial_value(&self) -> Vec<T> {
        vec![Self::g(T::zero())]
    }

    fn interval(&self) -> (f64, f64) {
        (0.0, self.t_end)
    }

    fn exact_solution(&self, t: T) -> Option<Vec<T>> {
        Some(vec![Self::g(t)])
    }

    fn error_norm(&self) -> ErrorNorm {
        ErrorNorm::Max
    }

    fn parameters(&self) -> Vec<(String, f64)> {
        vec![("mu".into(), self.mu), ("t_end".into(), self.t_end)]
    }

    fn asymptotic_dt_bound(&self) -> Option<f64> {
        Some(1.0 / self.mu.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{exact_solution_defect, jacobian_fd_defect};

    #[test]
    fn exact_solution_properties() {
        let p = ProtheroRobinson::default();
        assert_eq!(ProtheroRobinson::g(0.0), 1.0);
        for k in 0..20 {
            let t = 0.37 * k as f64;
            let mut dy = [0.0];
            p.rhs(t, &[ProtheroRobinson::g(t)], &mut dy);
            assert!((dy[0] - ProtheroRobinson::g_prime(t)).abs() < 1e-12);
            let h = 1e-6;
            let fd = (ProtheroRobinson::g(t + h) - ProtheroRobinson::g(t - h)) / (2.0 * h);
            assert!((fd - ProtheroRobinson::g_prime(t)).abs() < 1e-8);
            assert!(exact_solution_defect(&p, t + 0.01).unwrap() < 1e-8);
        }
        assert!(jacobian_fd_defect(&p, 0.3, &[0.5]) < 1e-6);
    }
}
