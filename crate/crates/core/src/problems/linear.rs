use num_complex::Complex;

use crate::linalg::Matrix;
use crate::scalar::Scalar;

use super::{ErrorNorm, OdeProblem};

/// The linear test equation `y' = lambda y`. A complex `lambda` acts on
/// `(Re y, Im y)` through its real 2x2 representation.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearTest {
    pub lambda: Complex<f64>,
    pub y0: Complex<f64>,
    pub t_end: f64,
}

impl LinearTest {
    pub fn new(lambda: Complex<f64>) -> Self {
        Self {
            lambda,
            y0: Complex::new(1.0, 0.0),
            t_end: 1.0,
        }
    }

    pub fn real(lambda: f64) -> Self {
        Self::new(Complex::new(lambda, 0.0))
    }

    fn is_real(&self) -> bool {
        self.lambda.im == 0.0 && self.y0.im == 0.0
    }

    /// Reads a state vector back as a complex number.
    pub fn as_complex<T: Scalar>(y: &[T]) -> Complex<f64> {
        Complex::new(y[0].as_f64(), y.get(1).map_or(0.0, |v| v.as_f64()))
    }
}

impl<T: Scalar> OdeProblem<T> for LinearTest {
    fn name(&self) -> String {
        "linear-test".into()
    }

    fn dimension(&self) -> usize {
        if self.is_real() {
            1
        } else {
            2
        }
    }

    fn rhs(&self, _t: T, y: &[T], dy: &mut [T]) {
        let (a, b) = (T::lit(self.lambda.re), T::lit(self.lambda.im));
        if y.len() == 1 {
            dy[0] = a * y[0];
        } else {
            dy[0] = a * y[0] - b * y[1];
            dy[1] = b * y[0] + a * y[1];
        }
    }

    fn jacobian(&self, _t: T, y: &[T], jac: &mut Matrix<T>) {
        let (a, b) = (T::lit(self.lambda.re), T::lit(self.lambda.im));
        jac.set(0, 0, a);
        if y.len() == 2 {
            jac.set(0, 1, -b);
            jac.set(1, 0, b);
            jac.set(1, 1, a);
        }
    }

    fn initial_value(&self) -> Vec<T> {
        if self.is_real() {
            vec![T::lit(self.y0.re)]
        } else {
            vec![T::lit(self.y0.re), T::lit(self.y0.im)]
        }
    }

    fn interval(&self) -> (f64, f64) {
        (0.0, self.t_end)
    }

    fn exact_solution(&self, t: T) -> Option<Vec<T>> {
        let y = self.y0 * (self.lambda * t.as_f64()).exp();
        Some(if self.is_real() {
            vec![T::lit(y.re)]
        } else {
            vec![T::lit(y.re), T::lit(y.im)]
        })
    }

    fn error_norm(&self) -> ErrorNorm {
        ErrorNorm::Max
    }

    fn parameters(&self) -> Vec<(String, f64)> {
        vec![
            ("lambda_re".into(), self.lambda.re),
            ("lambda_im".into(), self.lambda.im),
        ]
    }
}
