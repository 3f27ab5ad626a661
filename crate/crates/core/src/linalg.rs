//! Jacobian storage and the direct solvers used for the Newton stage systems.

use std::fmt;

use crate::error::LinalgError;
use crate::scalar::Scalar;

/// Sparsity pattern a problem declares for its Jacobian.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JacobianStructure {
    Dense,
    Tridiagonal,
    /// `lower` sub-diagonals and `upper` super-diagonals.
    Banded { lower: usize, upper: usize },
}

impl fmt::Display for JacobianStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Dense => f.write_str("dense"),
            Self::Tridiagonal => f.write_str("tridiagonal"),
            Self::Banded { lower, upper } => write!(f, "banded({lower},{upper})"),
        }
    }
}

/// Linear solver for `I - h a_ii J`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LinearSolver {
    /// Follow the problem's declared structure.
    #[default]
    Auto,
    DenseLu,
    Tridiagonal,
    Banded { lower: usize, upper: usize },
}

impl fmt::Display for LinearSolver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Auto => f.write_str("auto"),
            Self::DenseLu => f.write_str("dense-lu"),
            Self::Tridiagonal => f.write_str("tridiagonal"),
            Self::Banded { lower, upper } => write!(f, "banded({lower},{upper})"),
        }
    }
}

impl LinearSolver {
    /// The storage the solver works on, given what the problem provides.
    pub fn resolve(self, provided: JacobianStructure) -> Result<JacobianStructure, LinalgError> {
        let incompatible = || LinalgError::Incompatible {
            found: provided.to_string(),
            solver: self.to_string(),
        };
        let (pl, pu) = match provided {
            JacobianStructure::Dense => (usize::MAX, usize::MAX),
            JacobianStructure::Tridiagonal => (1, 1),
            JacobianStructure::Banded { lower, upper } => (lower, upper),
        };
        match self {
            Self::Auto => Ok(provided),
            Self::DenseLu => Ok(JacobianStructure::Dense),
            Self::Tridiagonal if pl <= 1 && pu <= 1 => Ok(JacobianStructure::Tridiagonal),
            Self::Banded { lower, upper } if pl <= lower && pu <= upper => {
                Ok(JacobianStructure::Banded { lower, upper })
            }
            _ => Err(incompatible()),
        }
    }
}

/// A square matrix in one of the supported storage schemes.
#[derive(Clone, Debug, PartialEq)]
pub enum Matrix<T> {
    /// Row-major `n x n`.
    Dense { n: usize, data: Vec<T> },
    Tridiagonal { sub: Vec<T>, diag: Vec<T>, sup: Vec<T> },
    /// Row `i` holds columns `i - lower ..= i + upper` at offsets `0 ..= lower + upper`.
    Banded {
        n: usize,
        lower: usize,
        upper: usize,
        data: Vec<T>,
    },
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(structure: JacobianStructure, n: usize) -> Self {
        match structure {
            JacobianStructure::Dense => Self::Dense {
                n,
                data: vec![T::zero(); n * n],
            },
            JacobianStructure::Tridiagonal => Self::Tridiagonal {
                sub: vec![T::zero(); n.saturating_sub(1)],
                diag: vec![T::zero(); n],
                sup: vec![T::zero(); n.saturating_sub(1)],
            },
            JacobianStructure::Banded { lower, upper } => Self::Banded {
                n,
                lower,
                upper,
                data: vec![T::zero(); n * (lower + upper + 1)],
            },
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Dense { n, .. } | Self::Banded { n, .. } => *n,
            Self::Tridiagonal { diag, .. } => diag.len(),
        }
    }

    pub fn structure(&self) -> JacobianStructure {
        match self {
            Self::Dense { .. } => JacobianStructure::Dense,
            Self::Tridiagonal { .. } => JacobianStructure::Tridiagonal,
            Self::Banded { lower, upper, .. } => JacobianStructure::Banded {
                lower: *lower,
                upper: *upper,
            },
        }
    }

    pub fn fill_zero(&mut self) {
        match self {
            Self::Dense { data, .. } | Self::Banded { data, .. } => data.fill(T::zero()),
            Self::Tridiagonal { sub, diag, sup } => {
                sub.fill(T::zero());
                diag.fill(T::zero());
                sup.fill(T::zero());
            }
        }
    }

    fn in_pattern(&self, i: usize, j: usize) -> bool {
        match self {
            Self::Dense { .. } => true,
            Self::Tridiagonal { .. } => i.abs_diff(j) <= 1,
            Self::Banded { lower, upper, .. } => j + lower >= i && j <= i + upper,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        if !self.in_pattern(i, j) {
            return T::zero();
        }
        match self {
            Self::Dense { n, data } => data[i * n + j],
            Self::Tridiagonal { sub, diag, sup } => match j as isize - i as isize {
                -1 => sub[j],
                0 => diag[i],
                _ => sup[i],
            },
            Self::Banded {
                lower, upper, data, ..
            } => data[i * (lower + upper + 1) + j + lower - i],
        }
    }

    /// Writes entry `(i, j)`.
    ///
    /// # Panics
    /// If `(i, j)` lies outside the sparsity pattern and `v` is nonzero.
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        if !self.in_pattern(i, j) {
            assert!(v.is_zero(), "entry ({i}, {j}) outside the {} pattern", self.structure());
            return;
        }
        match self {
            Self::Dense { n, data } => data[i * *n + j] = v,
            Self::Tridiagonal { sub, diag, sup } => match j as isize - i as isize {
                -1 => sub[j] = v,
                0 => diag[i] = v,
                _ => sup[i] = v,
            },
            Self::Banded {
                lower, upper, data, ..
            } => data[i * (*lower + *upper + 1) + j + *lower - i] = v,
        }
    }

    /// Copy in a (wider or equal) target structure.
    pub fn convert(&self, target: JacobianStructure) -> Self {
        let n = self.dim();
        let mut out = Self::zeros(target, n);
        for i in 0..n {
            let (lo, hi) = self.row_range(i);
            for j in lo..hi {
                out.set(i, j, self.get(i, j));
            }
        }
        out
    }

    fn row_range(&self, i: usize) -> (usize, usize) {
        let n = self.dim();
        match self {
            Self::Dense { .. } => (0, n),
            Self::Tridiagonal { .. } => (i.saturating_sub(1), (i + 2).min(n)),
            Self::Banded { lower, upper, .. } => (i.saturating_sub(*lower), (i + upper + 1).min(n)),
        }
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> T {
        (0..self.dim())
            .map(|i| {
                let (lo, hi) = self.row_range(i);
                (lo..hi).map(|j| self.get(i, j).abs()).sum::<T>()
            })
            .fold(T::zero(), |m, v| m.max(v))
    }

    /// `y = M x`.
    pub fn mul_vec(&self, x: &[T], y: &mut [T]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let (lo, hi) = self.row_range(i);
            *yi = (lo..hi).map(|j| self.get(i, j) * x[j]).sum();
        }
    }

    /// `I - scale * self`, same storage.
    pub fn identity_minus(&self, scale: T) -> Self {
        let mut out = self.clone();
        match &mut out {
            Self::Dense { data, .. } | Self::Banded { data, .. } => {
                data.iter_mut().for_each(|v| *v = -scale * *v)
            }
            Self::Tridiagonal { sub, diag, sup } => {
                for v in sub.iter_mut().chain(diag.iter_mut()).chain(sup.iter_mut()) {
                    *v = -scale * *v;
                }
            }
        }
        for i in 0..self.dim() {
            let v = out.get(i, i);
            out.set(i, i, T::one() + v);
        }
        out
    }

    pub fn factor(self) -> Result<Factorization<T>, LinalgError> {
        match self {
            Self::Dense { n, data } => dense_lu(n, data),
            Self::Tridiagonal { sub, diag, sup } => thomas(sub, diag, sup),
            Self::Banded {
                n,
                lower,
                upper,
                data,
            } => banded_lu(n, lower, upper, &data),
        }
    }
}

fn bad_pivot<T: Scalar>(p: T) -> bool {
    p.is_zero() || !p.is_finite()
}

/// LU factors ready for repeated solves.
#[derive(Clone, Debug)]
pub enum Factorization<T> {
    Dense {
        n: usize,
        lu: Vec<T>,
        perm: Vec<usize>,
    },
    Tridiagonal {
        sub: Vec<T>,
        /// Eliminated diagonal.
        diag: Vec<T>,
        sup: Vec<T>,
    },
    Banded {
        n: usize,
        lower: usize,
        /// Width of the stored row: `2 lower + upper + 1`.
        width: usize,
        lu: Vec<T>,
        pivots: Vec<usize>,
    },
}

fn dense_lu<T: Scalar>(n: usize, mut a: Vec<T>) -> Result<Factorization<T>, LinalgError> {
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&x, &y| a[x * n + k].abs().partial_cmp(&a[y * n + k].abs()).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap();
        if bad_pivot(a[p * n + k]) {
            return Err(LinalgError::Singular(k));
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            perm.swap(k, p);
        }
        let d = a[k * n + k];
        for i in k + 1..n {
            let l = a[i * n + k] / d;
            a[i * n + k] = l;
            if !l.is_zero() {
                for j in k + 1..n {
                    let v = a[k * n + j];
                    a[i * n + j] -= l * v;
                }
            }
        }
    }
    Ok(Factorization::Dense { n, lu: a, perm })
}

fn thomas<T: Scalar>(sub: Vec<T>, mut diag: Vec<T>, sup: Vec<T>) -> Result<Factorization<T>, LinalgError> {
    let n = diag.len();
    let mut sub = sub;
    for i in 0..n {
        if i > 0 {
            let l = sub[i - 1] / diag[i - 1];
            sub[i - 1] = l;
            diag[i] -= l * sup[i - 1];
        }
        if bad_pivot(diag[i]) {
            return Err(LinalgError::Singular(i));
        }
    }
    Ok(Factorization::Tridiagonal { sub, diag, sup })
}

fn banded_lu<T: Scalar>(
    n: usize,
    kl: usize,
    ku: usize,
    band: &[T],
) -> Result<Factorization<T>, LinalgError> {
    // Row i stores columns i - kl ..= i + ku + kl (room for fill-in from pivoting).
    let width = 2 * kl + ku + 1;
    let in_w = kl + ku + 1;
    let mut lu = vec![T::zero(); n * width];
    for i in 0..n {
        lu[i * width..i * width + in_w].copy_from_slice(&band[i * in_w..(i + 1) * in_w]);
    }
    let idx = |i: usize, j: usize| i * width + j + kl - i;
    let mut pivots = vec![0usize; n];
    for k in 0..n {
        let last = (k + kl).min(n - 1);
        let mut p = k;
        for r in k + 1..=last {
            if lu[idx(r, k)].abs() > lu[idx(p, k)].abs() {
                p = r;
            }
        }
        pivots[k] = p;
        if bad_pivot(lu[idx(p, k)]) {
            return Err(LinalgError::Singular(k));
        }
        let jmax = (k + ku + kl).min(n - 1);
        if p != k {
            for j in k..=jmax {
                lu.swap(idx(k, j), idx(p, j));
            }
        }
        let d = lu[idx(k, k)];
        for r in k + 1..=last {
            let l = lu[idx(r, k)] / d;
            lu[idx(r, k)] = l;
            if !l.is_zero() {
                for j in k + 1..=jmax {
                    let v = lu[idx(k, j)];
                    lu[idx(r, j)] -= l * v;
                }
            }
        }
    }
    Ok(Factorization::Banded {
        n,
        lower: kl,
        width,
        lu,
        pivots,
    })
}

impl<T: Scalar> Factorization<T> {
    /// Overwrites `x` (holding the right-hand side) with the solution.
    pub fn solve(&self, x: &mut [T]) {
        match self {
            Self::Dense { n, lu, perm } => {
                let n = *n;
                let b: Vec<T> = perm.iter().map(|&p| x[p]).collect();
                x.copy_from_slice(&b);
                for i in 0..n {
                    let mut acc = x[i];
                    for j in 0..i {
                        acc -= lu[i * n + j] * x[j];
                    }
                    x[i] = acc;
                }
                for i in (0..n).rev() {
                    let mut acc = x[i];
                    for j in i + 1..n {
                        acc -= lu[i * n + j] * x[j];
                    }
                    x[i] = acc / lu[i * n + i];
                }
            }
            Self::Tridiagonal { sub, diag, sup } => {
                let n = diag.len();
                for i in 1..n {
                    let v = x[i - 1];
                    x[i] -= sub[i - 1] * v;
                }
                for i in (0..n).rev() {
                    let mut acc = x[i];
                    if i + 1 < n {
                        acc -= sup[i] * x[i + 1];
                    }
                    x[i] = acc / diag[i];
                }
            }
            Self::Banded {
                n,
                lower,
                width,
                lu,
                pivots,
            } => {
                let (n, kl, width) = (*n, *lower, *width);
                let idx = |i: usize, j: usize| i * width + j + kl - i;
                for k in 0..n {
                    let p = pivots[k];
                    if p != k {
                        x.swap(k, p);
                    }
                    let v = x[k];
                    for r in k + 1..=(k + kl).min(n - 1) {
                        x[r] -= lu[idx(r, k)] * v;
                    }
                }
                let ku_total = width - kl - 1;
                for i in (0..n).rev() {
                    let mut acc = x[i];
                    for j in i + 1..=(i + ku_total).min(n - 1) {
                        acc -= lu[idx(i, j)] * x[j];
                    }
                    x[i] = acc / lu[idx(i, i)];
                }
            }
        }
    }
}
