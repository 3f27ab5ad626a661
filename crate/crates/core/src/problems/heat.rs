use std::f64::consts::PI;

use crate::linalg::{JacobianStructure, Matrix};
use crate::scalar::Scalar;

use super::{ErrorNorm, OdeProblem};

/// `u_t = u_xx + g(x, t)` on `(0, 1)` with homogeneous Dirichlet ends, forced
/// so that `u = exp(-t/10) sin(pi x)`. Second-order centred differences on the
/// `m` interior nodes `x_i = i / (m + 1)`.
///
/// `sin(pi x_i)` is an eigenvector of the discrete Laplacian, so the
/// semi-discrete system has the closed-form solution
/// `y_i(t) = alpha(t) sin(pi x_i)`, which is what errors are measured against.
#[derive(Clone, Debug, PartialEq)]
pub struct HeatEquation {
    pub m: usize,
    pub t_end: f64,
    pub forcing: bool,
}

impl Default for HeatEquation {
    fn default() -> Self {
        Self {
            m: 200,
            t_end: 1.0,
            forcing: true,
        }
    }
}

impl HeatEquation {
    pub fn new(m: usize) -> Self {
        assert!(m >= 3, "heat equation needs m >= 3");
        Self {
            m,
            ..Self::default()
        }
    }

    /// The same discretisation without forcing (decaying solution).
    pub fn unforced(m: usize) -> Self {
        Self {
            forcing: false,
            ..Self::new(m)
        }
    }

    pub fn dx(&self) -> f64 {
        1.0 / (self.m + 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.dx()
    }

    /// Eigenvalue `-(4/dx^2) sin^2(k pi dx / 2)` of the discrete Laplacian.
    pub fn laplacian_eigenvalue(&self, k: usize) -> f64 {
        let dx = self.dx();
        -(4.0 / (dx * dx)) * (k as f64 * PI * dx / 2.0).sin().powi(2)
    }

    /// Largest eigenvalue magnitude of the Jacobian.
    pub fn spectral_radius(&self) -> f64 {
        self.laplacian_eigenvalue(self.m).abs()
    }

    /// Amplitude of `sin(pi x_i)` in the semi-discrete solution.
    pub fn amplitude(&self, t: f64) -> f64 {
        let l1 = self.laplacian_eigenvalue(1);
        if !self.forcing {
            return (l1 * t).exp();
        }
        let c = (PI * PI - 0.1) / (-l1 - 0.1);
        c * (-t / 10.0).exp() + (1.0 - c) * (l1 * t).exp()
    }

    /// The PDE solution `exp(-t/10) sin(pi x)` at the nodes.
    pub fn pde_solution(&self, t: f64) -> Vec<f64> {
        (0..self.m)
            .map(|i| (-t / 10.0).exp() * (PI * self.node(i)).sin())
            .collect()
    }
}

impl<T: Scalar> OdeProblem<T> for HeatEquation {
    fn name(&self) -> String {
        if self.forcing {
            "heat".into()
        } else {
            "heat-unforced".into()
        }
    }

    fn dimension(&self) -> usize {
        self.m
    }

    fn rhs(&self, t: T, y: &[T], dy: &mut [T]) {
        let m = self.m;
        let dx = T::lit(self.dx());
        let inv = T::one() / (dx * dx);
        let amp = if self.forcing {
            T::lit(PI * PI - 0.1) * (-t / T::lit(10.0)).exp()
        } else {
            T::zero()
        };
        for i in 0..m {
            let left = if i > 0 { y[i - 1] } else { T::zero() };
            let right = if i + 1 < m { y[i + 1] } else { T::zero() };
            let x = T::lit(self.node(i));
            dy[i] = (left - T::lit(2.0) * y[i] + right) * inv + amp * (T::PI() * x).sin();
        }
    }

    fn jacobian(&self, _t: T, _y: &[T], jac: &mut Matrix<T>) {
        let dx = T::lit(self.dx());
        let inv = T::one() / (dx * dx);
        for i in 0..self.m {
            jac.set(i, i, -T::lit(2.0) * inv);
            if i > 0 {
                jac.set(i, i - 1, inv);
            }
            if i + 1 < self.m {
                jac.set(i, i + 1, inv);
            }
        }
    }

    fn jacobian_structure(&self) -> JacobianStructure {
        JacobianStructure::Tridiagonal
    }

    fn initial_value(&self) -> Vec<T> {
        (0..self.m)
            .map(|i| (T::PI() * T::lit(self.node(i))).sin())
            .collect()
    }

    fn interval(&self) -> (f64, f64) {
        (0.0, self.t_end)
    }

    fn exact_solution(&self, t: T) -> Option<Vec<T>> {
        let a = T::lit(self.amplitude(t.as_f64()));
        Some(
            (0..self.m)
                .map(|i| a * (T::PI() * T::lit(self.node(i))).sin())
                .collect(),
        )
    }

    fn error_norm(&self) -> ErrorNorm {
        ErrorNorm::Max
    }

    fn parameters(&self) -> Vec<(String, f64)> {
        vec![
            ("m".into(), self.m as f64),
            ("t_end".into(), self.t_end),
            ("forcing".into(), if self.forcing { 1.0 } else { 0.0 }),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{exact_solution_defect, jacobian_fd_defect};

    #[test]
    fn semidiscrete_solution_and_spectrum() {
        let p = HeatEquation::new(20);
        for t in [0.05, 0.3, 0.9] {
            assert!(exact_solution_defect(&p, t).unwrap() < 1e-8);
        }
        let y0: Vec<f64> = p.initial_value();
        assert_eq!(y0, OdeProblem::<f64>::exact_solution(&p, 0.0).unwrap());
        assert!(jacobian_fd_defect(&p, 0.1, &y0) < 1e-6);
        let big = HeatEquation::default();
        assert!((big.spectral_radius() - 4.0 * 201.0f64.powi(2)).abs() / big.spectral_radius() < 1e-3);
        // forcing: u_t - u_xx = (pi^2 - 1/10) u for the manufactured solution
        let u = |t: f64, x: f64| (-t / 10.0).exp() * (PI * x).sin();
        let (t, x, h) = (0.4, 0.3, 1e-4);
        let ut = (u(t + h, x) - u(t - h, x)) / (2.0 * h);
        let uxx = (u(t, x + h) - 2.0 * u(t, x) + u(t, x - h)) / (h * h);
        assert!((ut - uxx - (PI * PI - 0.1) * u(t, x)).abs() < 1e-6);
    }

    #[test]
    fn semidiscrete_close_to_pde() {
        let p = HeatEquation::default();
        let y: Vec<f64> = OdeProblem::<f64>::exact_solution(&p, 1.0).unwrap();
        let e = ErrorNorm::Max.distance(&y, &p.pde_solution(1.0));
        assert!(e < 1e-4 && e > 0.0, "{e}");
    }
}
