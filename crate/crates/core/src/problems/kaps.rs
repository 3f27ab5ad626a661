use crate::error::ProblemError;
use crate::linalg::Matrix;
use crate::scalar::Scalar;

use super::{ErrorNorm, OdeProblem};

/// `y1' = -(1/eps + 2) y1 + y2^2 / eps`, `y2' = y1 - y2 - y2^2`, with exact
/// solution `(exp(-2t), exp(-t))` for every `eps > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Kaps {
    epsilon: f64,
    pub t_end: f64,
}

impl Default for Kaps {
    fn default() -> Self {
        Self {
            epsilon: 1e-8,
            t_end: 10.0,
        }
    }
}

impl Kaps {
    pub fn new(epsilon: f64) -> Result<Self, ProblemError> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(ProblemError::Parameter(format!(
                "Kaps epsilon must be positive, got {epsilon}"
            )));
        }
        Ok(Self {
            epsilon,
            t_end: 10.0,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

impl<T: Scalar> OdeProblem<T> for Kaps {
    fn name(&self) -> String {
        "kaps".into()
    }

    fn dimension(&self) -> usize {
        2
    }

    fn rhs(&self, _t: T, y: &[T], dy: &mut [T]) {
        let inv = T::one() / T::lit(self.epsilon);
        dy[0] = -(inv + T::lit(2.0)) * y[0] + inv * y[1] * y[1];
        dy[1] = y[0] - y[1] - y[1] * y[1];
    }

    fn jacobian(&self, _t: T, y: &[T], jac: &mut Matrix<T>) {
        let inv = T::one() / T::lit(self.epsilon);
        jac.set(0, 0, -(inv + T::lit(2.0)));
        jac.set(0, 1, T::lit(2.0) * inv * y[1]);
        jac.set(1, 0, T::one());
        jac.set(1, 1, -T::one() - T::lit(2.0) * y[1]);
    }

    fn initial_value(&self) -> Vec<T> {
        vec![T::one(), T::one()]
    }

    fn interval(&self) -> (f64, f64) {
        (0.0, self.t_end)
    }

    fn exact_solution(&self, t: T) -> Option<Vec<T>> {
        Some(vec![(-T::lit(2.0) * t).exp(), (-t).exp()])
    }

    fn error_norm(&self) -> ErrorNorm {
        ErrorNorm::Max
    }

    fn parameters(&self) -> Vec<(String, f64)> {
        vec![("epsilon".into(), self.epsilon), ("t_end".into(), self.t_end)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{exact_solution_defect, jacobian_fd_defect};

    #[test]
    fn exact_values_and_rhs() {
        let p = Kaps::default();
        let y = OdeProblem::<f64>::exact_solution(&p, 1.0).unwrap();
        assert!((y[0] - 0.1353352832366127).abs() < 1e-15);
        assert!((y[1] - 0.36787944117144233).abs() < 1e-15);
        let mut dy = [0.0; 2];
        p.rhs(0.0, &[1.0, 1.0], &mut dy);
        assert_eq!(dy, [-2.0, -1.0]);
        let mild = Kaps::new(0.1).unwrap();
        for t in [0.1, 1.0, 5.0] {
            assert!(exact_solution_defect(&mild, t).unwrap() < 1e-8);
        }
        assert!(jacobian_fd_defect(&mild, 0.0, &[0.4, 0.9]) < 1e-6);
        assert!(jacobian_fd_defect(&p, 0.0, &[0.4, 0.9]) < 1e-6);
    }

    #[test]
    fn rejects_nonpositive_epsilon() {
        assert!(Kaps::new(0.0).is_err());
        assert!(Kaps::new(-1.0).is_err());
        assert!(Kaps::new(f64::NAN).is_err());
    }
}
