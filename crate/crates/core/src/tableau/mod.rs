//! Butcher tableaus: data model, built-in registry and the scheme text format.

mod builtin;
mod format;

use std::fmt::Debug;

use num_traits::{FromPrimitive, Num};

use crate::error::TableauError;
use crate::scalar::Scalar;

pub use builtin::{DIRK_10_7_SA_A52_CORRECTED, DIRK_10_7_SA_A52_PRINTED};
pub use format::{parse_tableau, serialize_tableau};

/// Tolerance on `|a[s][j] - b[j]|` for the stiff-accuracy flag.
pub const STIFF_ACCURACY_TOL: f64 = 1e-15;

/// Coefficient field a tableau can be built over: binary floats as well as
/// exact rationals.
pub trait Coefficient: Clone + Num + PartialOrd + FromPrimitive + Debug {}

impl<T> Coefficient for T where T: Clone + Num + PartialOrd + FromPrimitive + Debug {}

fn magnitude<T: Coefficient>(x: T) -> T {
    if x < T::zero() {
        T::zero() - x
    } else {
        x
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StructuralFlags {
    pub is_dirk: bool,
    pub is_stiffly_accurate: bool,
    pub has_zero_diagonal: bool,
}

/// Runge–Kutta coefficient set `(A, b, c)`. `c` is always the row sums of `A`.
#[derive(Clone, Debug, PartialEq)]
pub struct ButcherTableau<T> {
    name: String,
    order: usize,
    stages: usize,
    a: Vec<T>,
    b: Vec<T>,
    c: Vec<T>,
}

impl<T: Coefficient> ButcherTableau<T> {
    /// Builds a tableau from the rows of `A` and the weights `b`.
    pub fn new(
        name: impl Into<String>,
        order: usize,
        a: Vec<Vec<T>>,
        b: Vec<T>,
    ) -> Result<Self, TableauError> {
        let s = b.len();
        if s == 0 {
            return Err(TableauError::Dimension("tableau needs at least one stage".into()));
        }
        if order == 0 {
            return Err(TableauError::Dimension("declared order must be positive".into()));
        }
        if a.len() != s {
            return Err(TableauError::Dimension(format!(
                "A has {} rows but b has {} entries",
                a.len(),
                s
            )));
        }
        let mut flat = Vec::with_capacity(s * s);
        for (i, row) in a.into_iter().enumerate() {
            if row.len() != s {
                return Err(TableauError::Dimension(format!(
                    "row {} of A has {} entries, expected {}",
                    i + 1,
                    row.len(),
                    s
                )));
            }
            flat.extend(row);
        }
        let c = (0..s)
            .map(|i| {
                flat[i * s..(i + 1) * s]
                    .iter()
                    .cloned()
                    .fold(T::zero(), |acc, x| acc + x)
            })
            .collect();
        Ok(Self {
            name: name.into(),
            order,
            stages: s,
            a: flat,
            b,
            c,
        })
    }

    pub fn structural_flags(&self) -> StructuralFlags {
        let s = self.stages;
        let is_dirk = (0..s).all(|i| (i + 1..s).all(|j| self.a(i, j).is_zero()));
        let tol = T::from_f64(STIFF_ACCURACY_TOL).unwrap_or_else(T::zero);
        let is_stiffly_accurate = (0..s).all(|j| magnitude(self.a(s - 1, j) - self.b[j].clone()) <= tol);
        let has_zero_diagonal = (0..s).any(|i| self.a(i, i).is_zero());
        StructuralFlags {
            is_dirk,
            is_stiffly_accurate,
            has_zero_diagonal,
        }
    }

    pub fn is_dirk(&self) -> bool {
        self.structural_flags().is_dirk
    }

    pub fn is_stiffly_accurate(&self) -> bool {
        self.structural_flags().is_stiffly_accurate
    }

    /// Largest coefficient magnitude `max{|a_ij|, |b_i|, |c_i|}`.
    pub fn max_coefficient(&self) -> T {
        self.a
            .iter()
            .chain(&self.b)
            .chain(&self.c)
            .map(|x| magnitude(x.clone()))
            .fold(T::zero(), |m, x| if x > m { x } else { m })
    }

    /// Same tableau with `A` and `b` mapped entrywise; `c` is recomputed.
    pub fn map_coefficients<U: Coefficient>(&self, mut f: impl FnMut(&T) -> U) -> ButcherTableau<U> {
        let a = self.rows().map(|row| row.iter().map(&mut f).collect()).collect();
        let b = self.b.iter().map(&mut f).collect();
        ButcherTableau::new(self.name.clone(), self.order, a, b).expect("shape preserved")
    }
}

impl<T> ButcherTableau<T> {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    /// Declared classical order `p`.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn stages(&self) -> usize {
        self.stages
    }

    /// Entry `a[i][j]`, zero-based.
    #[inline]
    pub fn a(&self, i: usize, j: usize) -> T
    where
        T: Clone,
    {
        self.a[i * self.stages + j].clone()
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.a[i * self.stages..(i + 1) * self.stages]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.a.chunks(self.stages)
    }

    /// Row-major `A`.
    pub fn a_flat(&self) -> &[T] {
        &self.a
    }

    pub fn b(&self) -> &[T] {
        &self.b
    }

    pub fn c(&self) -> &[T] {
        &self.c
    }
}

impl<T: Scalar> ButcherTableau<T> {
    /// `max_i |c_i - sum_j a_ij|` evaluated with compensated summation.
    pub fn row_sum_defect(&self) -> T {
        (0..self.stages)
            .map(|i| (self.c[i] - crate::scalar::sum2(self.row(i).iter().copied())).abs())
            .fold(T::zero(), T::max)
    }
}

/// Canonical names of the built-in schemes, in registry order.
pub fn builtin_names() -> Vec<&'static str> {
    builtin::BUILTINS.iter().map(|b| b.name).collect()
}

/// Normalizes a user supplied scheme identifier to its canonical name.
/// Accepts the canonical `DIRK(s,p)X` form (any case, optional spaces) and the
/// shell-friendly alias `dirk-s-p-x`.
pub fn resolve_builtin_name(name: &str) -> Option<&'static str> {
    let squash = |s: &str| {
        s.chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase()
    };
    let key = squash(name);
    builtin::BUILTINS
        .iter()
        .find(|b| squash(b.name) == key || squash(b.alias) == key)
        .map(|b| b.name)
}

pub fn builtin_alias(name: &str) -> Option<&'static str> {
    let canonical = resolve_builtin_name(name)?;
    builtin::BUILTINS.iter().find(|b| b.name == canonical).map(|b| b.alias)
}

/// Loads one of the six built-in schemes.
pub fn load_builtin<T: Scalar>(name: &str) -> Result<ButcherTableau<T>, TableauError> {
    let canonical =
        resolve_builtin_name(name).ok_or_else(|| TableauError::UnknownScheme(name.to_string()))?;
    let scheme = builtin::BUILTINS
        .iter()
        .find(|b| b.name == canonical)
        .expect("resolved name is registered");
    let s = scheme.lower.len();
    let parse = |txt: &str| -> T {
        txt.parse::<T>()
            .unwrap_or_else(|_| panic!("builtin coefficient {txt} parses"))
    };
    let a: Vec<Vec<T>> = scheme
        .lower
        .iter()
        .map(|row| {
            let mut full: Vec<T> = row.iter().map(|v| parse(v)).collect();
            full.resize(s, T::zero());
            full
        })
        .collect();
    let b = match scheme.b {
        Some(b) => b.iter().map(|v| parse(v)).collect(),
        None => a[s - 1].clone(),
    };
    let tableau = ButcherTableau::new(scheme.name, scheme.order, a, b)?;
    debug_assert_eq!(tableau.is_stiffly_accurate(), scheme.stiffly_accurate);
    Ok(tableau)
}

/// All built-in schemes in registry order.
pub fn all_builtins<T: Scalar>() -> Vec<ButcherTableau<T>> {
    builtin_names()
        .into_iter()
        .map(|n| load_builtin(n).expect("registered"))
        .collect()
}

/// One-stage implicit midpoint rule (order 2).
pub fn implicit_midpoint<T: Coefficient>() -> ButcherTableau<T> {
    let half = T::one() / (T::one() + T::one());
    ButcherTableau::new("implicit-midpoint", 2, vec![vec![half]], vec![T::one()]).expect("valid")
}

/// Forward Euler (order 1).
pub fn explicit_euler<T: Coefficient>() -> ButcherTableau<T> {
    ButcherTableau::new("explicit-euler", 1, vec![vec![T::zero()]], vec![T::one()]).expect("valid")
}

/// One-stage theta method `A = [[theta]]`, `b = [1]`; A-stable iff `theta >= 1/2`.
pub fn theta_method<T: Coefficient>(theta: T) -> ButcherTableau<T> {
    ButcherTableau::new("theta-method", 1, vec![vec![theta]], vec![T::one()]).expect("valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dirk66_first_coefficient_verbatim() {
        let t = load_builtin::<f64>("DIRK(6,6)A").unwrap();
        assert_eq!(t.a(0, 0), 3.337723370858640e-01);
        assert_eq!(t.stages(), 6);
        assert_eq!(t.order(), 6);
    }

    #[test]
    fn stiffly_accurate_rows_equal_b() {
        for name in ["DIRK(8,6)SA", "DIRK(10,7)SA", "DIRK(15,8)SA"] {
            let t = load_builtin::<f64>(name).unwrap();
            let s = t.stages();
            for j in 0..s {
                assert_eq!(t.a(s - 1, j), t.b()[j], "{name} column {j}");
            }
        }
        assert_eq!(load_builtin::<f64>("DIRK(15,8)SA").unwrap().stages(), 15);
    }

    #[test]
    fn row_sums_match_c() {
        for t in all_builtins::<f64>() {
            assert!(t.row_sum_defect() <= 1e-13, "{}", t.name());
        }
    }

    #[test]
    fn structural_flags_examples() {
        let t = load_builtin::<f64>("DIRK(10,7)SA").unwrap();
        assert_eq!(
            t.structural_flags(),
            StructuralFlags {
                is_dirk: true,
                is_stiffly_accurate: true,
                has_zero_diagonal: false
            }
        );
        let t = load_builtin::<f64>("DIRK(13,8)A").unwrap();
        assert_eq!(
            t.structural_flags(),
            StructuralFlags {
                is_dirk: true,
                is_stiffly_accurate: false,
                has_zero_diagonal: false
            }
        );
        assert!(explicit_euler::<f64>().structural_flags().has_zero_diagonal);
    }

    #[test]
    fn unknown_scheme_is_not_found() {
        assert!(matches!(
            load_builtin::<f64>("DIRK(4,4)Q"),
            Err(TableauError::UnknownScheme(_))
        ));
    }

    #[test]
    fn aliases_resolve() {
        assert_eq!(resolve_builtin_name("dirk-13-8-a"), Some("DIRK(13,8)A"));
        assert_eq!(resolve_builtin_name("dirk(15, 8)sa"), Some("DIRK(15,8)SA"));
        assert_eq!(builtin_alias("DIRK(9,7)A"), Some("dirk-9-7-a"));
        assert_eq!(resolve_builtin_name("dirk-9-7"), None);
    }

    #[test]
    fn corrected_entry_is_in_registry() {
        let t = load_builtin::<f64>("DIRK(10,7)SA").unwrap();
        assert_eq!(t.a(4, 1), DIRK_10_7_SA_A52_CORRECTED.parse::<f64>().unwrap());
        assert_eq!(t.a(8, 5), DIRK_10_7_SA_A52_PRINTED.parse::<f64>().unwrap());
    }

    #[test]
    fn builtins_load_in_single_precision() {
        let t = load_builtin::<f32>("DIRK(9,7)A").unwrap();
        assert_eq!(t.a(0, 0), 1.933847521874120e-01f32);
    }

    #[test]
    fn implicit_midpoint_row_sum() {
        let t = implicit_midpoint::<f64>();
        assert_eq!(t.c(), &[0.5]);
    }

    #[test]
    fn max_coefficient_dirk66() {
        let t = load_builtin::<f64>("DIRK(6,6)A").unwrap();
        assert!((t.max_coefficient() - 3.979558967265820).abs() < 1e-15);
    }
}
