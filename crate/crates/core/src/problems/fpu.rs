use crate::linalg::Matrix;
use crate::scalar::Scalar;

use super::{ErrorNorm, OdeProblem};

/// Fermi–Pasta–Ulam chain of `2m` masses with alternating stiff linear and soft
/// cubic springs, written in the stretch/elongation coordinates `x0`, `x1`.
///
/// State layout: `[x0_1..x0_m, x1_1..x1_m, y0_1..y0_m, y1_1..y1_m]` where `y`
/// are the conjugate momenta.
#[derive(Clone, Debug, PartialEq)]
pub struct FermiPastaUlam {
    pub omega: f64,
    pub m: usize,
    pub t_end: f64,
    /// Include the quartic soft-spring coupling.
    pub quartic: bool,
}

impl Default for FermiPastaUlam {
    fn default() -> Self {
        Self {
            omega: 50.0,
            m: 3,
            t_end: 1.0,
            quartic: true,
        }
    }
}

impl FermiPastaUlam {
    pub fn new(omega: f64, m: usize) -> Self {
        assert!(omega > 0.0 && m >= 1, "FPU needs omega > 0 and m >= 1");
        Self {
            omega,
            m,
            ..Self::default()
        }
    }

    /// The chain with the soft springs removed: decoupled harmonic oscillators.
    pub fn linear(omega: f64, m: usize) -> Self {
        Self {
            quartic: false,
            ..Self::new(omega, m)
        }
    }

    /// Soft-spring elongations as sparse linear forms over the state indices.
    fn couplings(&self) -> Vec<Vec<(usize, f64)>> {
        let m = self.m;
        let (x0, x1) = (|i: usize| i, |i: usize| m + i);
        let mut out = vec![vec![(x0(0), 1.0), (x1(0), -1.0)]];
        for k in 1..m {
            out.push(vec![
                (x0(k), 1.0),
                (x1(k), -1.0),
                (x0(k - 1), -1.0),
                (x1(k - 1), -1.0),
            ]);
        }
        out.push(vec![(x0(m - 1), 1.0), (x1(m - 1), 1.0)]);
        out
    }

    fn elongation<T: Scalar>(form: &[(usize, f64)], y: &[T]) -> T {
        form.iter().map(|&(i, c)| T::lit(c) * y[i]).sum()
    }

    pub fn hamiltonian<T: Scalar>(&self, y: &[T]) -> T {
        let m = self.m;
        let half = T::lit(0.5);
        let kinetic: T = y[2 * m..].iter().map(|p| *p * *p).sum::<T>() * half;
        let w2 = T::lit(self.omega * self.omega);
        let stiff: T = y[m..2 * m].iter().map(|x| *x * *x).sum::<T>() * half * w2;
        let soft: T = if self.quartic {
            self.couplings()
                .iter()
                .map(|f| Self::elongation::<T>(f, y).powi(4))
                .sum::<T>()
                * T::lit(0.25)
        } else {
            T::zero()
        };
        kinetic + stiff + soft
    }

    /// `dH/dx`, length `2m`.
    pub fn potential_gradient<T: Scalar>(&self, y: &[T]) -> Vec<T> {
        let m = self.m;
        let w2 = T::lit(self.omega * self.omega);
        let mut g = vec![T::zero(); 2 * m];
        for i in 0..m {
            g[m + i] = w2 * y[m + i];
        }
        if self.quartic {
            for form in self.couplings() {
                let d = Self::elongation::<T>(&form, y);
                let d3 = d * d * d;
                for &(i, c) in &form {
                    g[i] += T::lit(c) * d3;
                }
            }
        }
        g
    }
}

impl<T: Scalar> OdeProblem<T> for FermiPastaUlam {
    fn name(&self) -> String {
        if self.quartic {
            "fpu".into()
        } else {
            "fpu-linear".into()
        }
    }

    fn dimension(&self) -> usize {
        4 * self.m
    }

    fn rhs(&self, _t: T, y: &[T], dy: &mut [T]) {
        let n = 2 * self.m;
        dy[..n].copy_from_slice(&y[n..]);
        for (d, g) in dy[n..].iter_mut().zip(self.potential_gradient(y)) {
            *d = -g;
        }
    }

    fn jacobian(&self, _t: T, y: &[T], jac: &mut Matrix<T>) {
        let m = self.m;
        let n = 2 * m;
        for i in 0..n {
            jac.set(i, n + i, T::one());
        }
        let w2 = T::lit(self.omega * self.omega);
        for i in 0..m {
            jac.set(n + m + i, m + i, -w2);
        }
        if self.quartic {
            for form in self.couplings() {
                let d = Self::elongation::<T>(&form, y);
                let s = T::lit(3.0) * d * d;
                for &(i, ci) in &form {
                    for &(j, cj) in &form {
                        let v = jac.get(n + i, j) - s * T::lit(ci * cj);
                        jac.set(n + i, j, v);
                    }
                }
            }
        }
    }

    fn initial_value(&self) -> Vec<T> {
        let m = self.m;
        let mut y = vec![T::zero(); 4 * m];
        y[0] = T::one();
        y[m] = T::one() / T::lit(self.omega);
        y[2 * m] = T::one();
        y[3 * m] = T::one();
        y
    }

    fn interval(&self) -> (f64, f64) {
        (0.0, self.t_end)
    }

    fn error_norm(&self) -> ErrorNorm {
        ErrorNorm::Rms
    }

    fn parameters(&self) -> Vec<(String, f64)> {
        vec![
            ("omega".into(), self.omega),
            ("m".into(), self.m as f64),
            ("t_end".into(), self.t_end),
            ("quartic".into(), if self.quartic { 1.0 } else { 0.0 }),
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
    fn initial_energy() {
        let p = FermiPastaUlam::default();
        let y0: Vec<f64> = p.initial_value();
        let w = 50.0f64;
        let want = 1.0 + 0.5 + 0.25 * (1.0 - 1.0 / w).powi(4) + 0.25 * (-1.0 - 1.0 / w).powi(4);
        assert!((p.hamiltonian(&y0) - want).abs() < 1e-14);
    }

    #[test]
    fn gradient_matches_hamiltonian() {
        let p = FermiPastaUlam::default();
        let y0: Vec<f64> = p.initial_value();
        let g = p.potential_gradient(&y0);
        for i in 0..6 {
            let h = 1e-6;
            let (mut a, mut b) = (y0.clone(), y0.clone());
            a[i] += h;
            b[i] -= h;
            let fd = (p.hamiltonian(&a) - p.hamiltonian(&b)) / (2.0 * h);
            assert!((fd - g[i]).abs() <= 1e-6 * (1.0 + g[i].abs()), "{i}: {fd} {}", g[i]);
        }
    }

    #[test]
    fn jacobian_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for p in [FermiPastaUlam::default(), FermiPastaUlam::linear(50.0, 2)] {
            for _ in 0..10 {
                let n = OdeProblem::<f64>::dimension(&p);
                let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                assert!(jacobian_fd_defect(&p, 0.0, &y) < 1e-6);
            }
        }
    }
}
