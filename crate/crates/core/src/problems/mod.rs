//! Test problems: stiff scalar and small systems, a Hamiltonian chain and two
//! method-of-lines PDE discretizations.

mod brusselator;
mod fpu;
mod heat;
mod kaps;
mod linear;
mod prothero_robinson;
mod van_der_pol;

pub use brusselator::Brusselator;
pub use fpu::FermiPastaUlam;
pub use heat::HeatEquation;
pub use kaps::Kaps;
pub use linear::LinearTest;
pub use prothero_robinson::ProtheroRobinson;
pub use van_der_pol::VanDerPol;

use crate::error::ProblemError;
use crate::linalg::{JacobianStructure, Matrix};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorNorm {
    Max,
    /// Root mean square over components.
    Rms,
}

impl ErrorNorm {
    pub fn norm<T: Scalar>(self, v: &[T]) -> T {
        match self {
            Self::Max => v.iter().fold(T::zero(), |m, x| m.max(x.abs())),
            Self::Rms => {
                if v.is_empty() {
                    return T::zero();
                }
                let ss = crate::scalar::sum2(v.iter().map(|x| *x * *x));
                (ss / T::from_usize(v.len()).unwrap()).sqrt()
            }
        }
    }

    pub fn distance<T: Scalar>(self, a: &[T], b: &[T]) -> T {
        let d: Vec<T> = a.iter().zip(b).map(|(x, y)| *x - *y).collect();
        self.norm(&d)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Max => "max",
            Self::Rms => "rms",
        }
    }
}

/// An initial value problem `y' = f(t, y)` with an analytic Jacobian.
pub trait OdeProblem<T: Scalar>: Send + Sync {
    fn name(&self) -> String;
    fn dimension(&self) -> usize;
    fn rhs(&self, t: T, y: &[T], dy: &mut [T]);
    /// Fills `jac`, which has the storage of [`Self::jacobian_structure`] and
    /// is zeroed on entry.
    fn jacobian(&self, t: T, y: &[T], jac: &mut Matrix<T>);
    fn jacobian_structure(&self) -> JacobianStructure {
        JacobianStructure::Dense
    }
    fn initial_value(&self) -> Vec<T>;
    fn interval(&self) -> (f64, f64);
    fn exact_solution(&self, _t: T) -> Option<Vec<T>> {
        None
    }
    fn error_norm(&self) -> ErrorNorm {
        ErrorNorm::Max
    }
    fn parameters(&self) -> Vec<(String, f64)> {
        Vec::new()
    }
    /// Step sizes below this resolve the fastest time scale, so convergence
    /// slopes are fitted only there.
    fn asymptotic_dt_bound(&self) -> Option<f64> {
        None
    }

    fn has_exact_solution(&self) -> bool {
        self.exact_solution(T::zero()).is_some()
    }

    /// Stable identifier for the problem and its parameters.
    fn cache_key(&self) -> String {
        let mut key = self.name();
        for (k, v) in self.parameters() {
            key.push_str(&format!("_{k}={v:e}"));
        }
        key.retain(|c| c.is_ascii_alphanumeric() || "_=.+-".contains(c));
        key
    }
}

pub fn problem_names() -> &'static [&'static str] {
    &[
        "prothero-robinson",
        "van-der-pol",
        "kaps",
        "fpu",
        "heat",
        "brusselator",
    ]
}

/// Looks up a problem with its default parameters. Accepts the names from
/// [`problem_names`] and a few short aliases (`pr`, `vdp`).
pub fn problem_by_name(name: &str) -> Result<Box<dyn OdeProblem<f64>>, ProblemError> {
    let key: String = name
        .chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .collect::<String>()
        .to_ascii_lowercase();
    Ok(match key.as_str() {
        "protherorobinson" | "pr" => Box::new(ProtheroRobinson::default()),
        "vanderpol" | "vdp" => Box::new(VanDerPol::default()),
        "kaps" => Box::new(Kaps::default()),
        "fpu" | "fermipastaulam" => Box::new(FermiPastaUlam::default()),
        "heat" | "heatequation" => Box::new(HeatEquation::default()),
        "brusselator" => Box::new(Brusselator::default()),
        _ => return Err(ProblemError::Unknown(name.to_string())),
    })
}

/// Largest relative deviation between the analytic Jacobian and central
/// differences of the right-hand side, over all entries.
pub fn jacobian_fd_defect<P: OdeProblem<f64> + ?Sized>(p: &P, t: f64, y: &[f64]) -> f64 {
    let n = p.dimension();
    let mut jac = Matrix::zeros(p.jacobian_structure(), n);
    p.jacobian(t, y, &mut jac);
    let mut worst = 0.0f64;
    let mut fp = vec![0.0; n];
    let mut fm = vec![0.0; n];
    let mut scale = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            scale = scale.max(jac.get(i, j).abs());
        }
    }
    for j in 0..n {
        let h = 1e-6 * (1.0 + y[j].abs());
        let mut yp = y.to_vec();
        let mut ym = y.to_vec();
        yp[j] += h;
        ym[j] -= h;
        p.rhs(t, &yp, &mut fp);
        p.rhs(t, &ym, &mut fm);
        for i in 0..n {
            let fd = (fp[i] - fm[i]) / (2.0 * h);
            let d = (fd - jac.get(i, j)).abs() / (1.0 + jac.get(i, j).abs().max(1e-8 * scale));
            worst = worst.max(d);
        }
    }
    worst
}

/// Largest `|y'(t) - f(t, y(t))|`, relative to `1 + |f|`, with `y'` from a
/// fourth-order central difference of the exact solution.
pub fn exact_solution_defect<P: OdeProblem<f64> + ?Sized>(p: &P, t: f64) -> Option<f64> {
    let h = 1e-3;
    let y = p.exact_solution(t)?;
    let at = |s: f64| p.exact_solution(s).unwrap();
    let (y1, y_1, y2, y_2) = (at(t + h), at(t - h), at(t + 2.0 * h), at(t - 2.0 * h));
    let mut f = vec![0.0; y.len()];
    p.rhs(t, &y, &mut f);
    Some(
        (0..y.len())
            .map(|i| {
                let d = (8.0 * (y1[i] - y_1[i]) - (y2[i] - y_2[i])) / (12.0 * h);
                (d - f[i]).abs() / (1.0 + f[i].abs())
            })
            .fold(0.0, f64::max),
    )
}
