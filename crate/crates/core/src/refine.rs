//! Local polish of tableau coefficients by Levenberg–Marquardt on the stacked
//! order-condition residuals, with structural zeros and stiff-accuracy ties
//! held fixed.

use nalgebra::{DMatrix, DVector};

use crate::conditions::{linf_norm, stacked_residuals};
use crate::error::{RefineError, StabilityError};
use crate::stability::{a_stability_check, stability_polynomials, AStabilityVerdict};
use crate::tableau::ButcherTableau;

/// Largest initial residual (sup norm) accepted by [`polish`].
pub const BASIN_BOUND: f64 = 1e-3;
pub const DEFAULT_CONVERGENCE_TOL: f64 = 1e-14;
pub const DEFAULT_MAX_ITERATIONS: usize = 200;
pub const INITIAL_DAMPING: f64 = 1e-3;
/// Consecutive rejected steps before giving up.
pub const STAGNATION_LIMIT: usize = 5;
/// Relative forward-difference step for the Jacobian.
pub const FD_STEP: f64 = 1e-7;
pub const MAX_REFINE_ORDER: usize = 8;

/// A single coefficient position: `A(i, j)` or `B(j)`, zero-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Entry {
    A(usize, usize),
    B(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefineSpec {
    pub target_order: usize,
    /// Positions kept at their input values.
    pub fixed_pattern: Vec<Entry>,
    pub free_variables: Vec<Entry>,
    /// `b_j = a_{s,j}` is re-imposed after every update; all `B` entries
    /// are then in the fixed pattern.
    pub tie_b_to_last_row: bool,
    pub max_iterations: usize,
    pub convergence_tol: f64,
}

impl RefineSpec {
    /// Default spec for a DIRK tableau: every nonzero entry on or below the
    /// diagonal is free, zeros stay zero, and `b` is free unless the tableau
    /// is stiffly accurate.
    pub fn for_tableau(t: &ButcherTableau<f64>) -> Self {
        let s = t.stages();
        let tie = t.is_stiffly_accurate();
        let mut fixed = Vec::new();
        let mut free = Vec::new();
        for i in 0..s {
            for j in 0..s {
                if j <= i && t.a(i, j) != 0.0 {
                    free.push(Entry::A(i, j));
                } else {
                    fixed.push(Entry::A(i, j));
                }
            }
        }
        for j in 0..s {
            if tie || t.b()[j] == 0.0 {
                fixed.push(Entry::B(j));
            } else {
                free.push(Entry::B(j));
            }
        }
        Self {
            target_order: t.order(),
            fixed_pattern: fixed,
            free_variables: free,
            tie_b_to_last_row: tie,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            convergence_tol: DEFAULT_CONVERGENCE_TOL,
        }
    }

    pub fn validate(&self, t: &ButcherTableau<f64>) -> Result<(), RefineError> {
        let s = t.stages();
        if self.target_order == 0 || self.target_order > MAX_REFINE_ORDER {
            return Err(RefineError::Spec(format!(
                "target order {} outside 1..={MAX_REFINE_ORDER}",
                self.target_order
            )));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(RefineError::Spec("convergence_tol must be positive".into()));
        }
        let mut seen = vec![0u8; s * s + s];
        let slot = |e: &Entry| -> Result<usize, RefineError> {
            match *e {
                Entry::A(i, j) if i < s && j < s => Ok(i * s + j),
                Entry::B(j) if j < s => Ok(s * s + j),
                _ => Err(RefineError::Spec(format!("{e:?} is outside a {s}-stage tableau"))),
            }
        };
        for e in self.fixed_pattern.iter().chain(&self.free_variables) {
            seen[slot(e)?] += 1;
        }
        if let Some(k) = seen.iter().position(|&n| n != 1) {
            let e = if k < s * s { Entry::A(k / s, k % s) } else { Entry::B(k - s * s) };
            return Err(RefineError::Spec(format!(
                "{e:?} must be either fixed or free exactly once"
            )));
        }
        for e in &self.free_variables {
            match *e {
                Entry::A(i, j) if j > i => {
                    return Err(RefineError::Spec(format!("{e:?} lies above the diagonal")))
                }
                Entry::B(_) if self.tie_b_to_last_row => {
                    return Err(RefineError::Spec(format!("{e:?} is tied to the last row of A")))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogEntry {
    pub iteration: usize,
    /// Sup-norm residual after this iteration (of the accepted iterate).
    pub residual: f64,
    pub damping: f64,
    pub accepted: bool,
}

/// Verdict of the a-posteriori A-stability check on a polished tableau.
#[derive(Clone, Debug, PartialEq)]
pub struct GuardVerdict {
    pub verdict: Result<AStabilityVerdict, StabilityError>,
}

impl GuardVerdict {
    pub fn passed(&self) -> bool {
        matches!(&self.verdict, Ok(v) if v.a_stable)
    }

    pub fn margin(&self) -> Option<f64> {
        self.verdict.as_ref().ok().map(AStabilityVerdict::margin)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefineOutcome {
    pub tableau: ButcherTableau<f64>,
    pub initial_residual: f64,
    pub final_residual: f64,
    pub iterations: usize,
    /// `final_residual <= convergence_tol`.
    pub converged: bool,
    pub log: Vec<LogEntry>,
    /// Set by [`RefineOutcome::verify`]; `None` means unverified.
    pub stability: Option<GuardVerdict>,
}

impl RefineOutcome {
    pub fn verify(&mut self) -> &GuardVerdict {
        self.stability.insert(a_stability_guard(&self.tableau))
    }

    pub fn is_verified(&self) -> bool {
        self.stability.as_ref().is_some_and(GuardVerdict::passed)
    }

    pub fn log_csv(&self) -> String {
        let mut out = String::from("iteration,residual,damping,accepted\n");
        for e in &self.log {
            out.push_str(&format!(
                "{},{:e},{:e},{}\n",
                e.iteration, e.residual, e.damping, e.accepted
            ));
        }
        out
    }
}

pub fn a_stability_guard(t: &ButcherTableau<f64>) -> GuardVerdict {
    GuardVerdict {
        verdict: a_stability_check(&stability_polynomials(t)),
    }
}

struct Layout<'a> {
    base: &'a ButcherTableau<f64>,
    free: &'a [Entry],
    tie: bool,
}

impl Layout<'_> {
    fn values(&self) -> Vec<f64> {
        self.free
            .iter()
            .map(|e| match *e {
                Entry::A(i, j) => self.base.a(i, j),
                Entry::B(j) => self.base.b()[j],
            })
            .collect()
    }

    fn build(&self, x: &[f64]) -> ButcherTableau<f64> {
        let s = self.base.stages();
        let mut a: Vec<Vec<f64>> = self.base.rows().map(<[f64]>::to_vec).collect();
        let mut b = self.base.b().to_vec();
        for (e, v) in self.free.iter().zip(x) {
            match *e {
                Entry::A(i, j) => a[i][j] = *v,
                Entry::B(j) => b[j] = *v,
            }
        }
        if self.tie {
            b.copy_from_slice(&a[s - 1]);
        }
        ButcherTableau::new(self.base.name(), self.base.order(), a, b).expect("shape preserved")
    }
}

/// Polishes `t` towards an exact root of the order conditions through
/// `spec.target_order`.
pub fn polish(t: &ButcherTableau<f64>, spec: &RefineSpec) -> Result<RefineOutcome, RefineError> {
    spec.validate(t)?;
    let p = spec.target_order;
    let layout = Layout {
        base: t,
        free: &spec.free_variables,
        tie: spec.tie_b_to_last_row,
    };
    let mut x = layout.values();
    let mut current = layout.build(&x);
    let mut r = stacked_residuals(&current, p);
    let mut sup = linf_norm(&r);
    let initial = sup;
    if !(sup <= BASIN_BOUND) {
        return Err(RefineError::OutOfBasin {
            residual: sup,
            bound: BASIN_BOUND,
        });
    }
    let mut log = Vec::new();
    let mut lambda = INITIAL_DAMPING;
    let mut rejected = 0;
    let mut iterations = 0;
    let n = x.len();
    let m = r.len();
    while sup > spec.convergence_tol && iterations < spec.max_iterations && n > 0 {
        iterations += 1;
        let mut jac = DMatrix::<f64>::zeros(m, n);
        for k in 0..n {
            let h = FD_STEP * (1.0 + x[k].abs());
            let mut xp = x.clone();
            xp[k] += h;
            let h = xp[k] - x[k];
            let rp = stacked_residuals(&layout.build(&xp), p);
            for i in 0..m {
                jac[(i, k)] = (rp[i] - r[i]) / h;
            }
        }
        let scale: Vec<f64> = (0..n).map(|k| jac.column(k).norm_squared()).collect();
        let floor = 1e-12 * scale.iter().cloned().fold(0.0, f64::max);
        let rhs_r = DVector::from_iterator(m, r.iter().map(|v| -v));
        let mut step_accepted = false;
        while !step_accepted {
            // min |J d + r|^2 + lambda sum_k D_k d_k^2 as one stacked solve
            let mut aug = DMatrix::<f64>::zeros(m + n, n);
            aug.rows_mut(0, m).copy_from(&jac);
            for k in 0..n {
                aug[(m + k, k)] = (lambda * scale[k].max(floor)).sqrt();
            }
            let mut rhs = DVector::<f64>::zeros(m + n);
            rhs.rows_mut(0, m).copy_from(&rhs_r);
            let delta = aug
                .svd(true, true)
                .solve(&rhs, 0.0)
                .map_err(|e| RefineError::Spec(e.to_string()))?;
            let trial_x: Vec<f64> = x.iter().zip(delta.iter()).map(|(a, d)| a + d).collect();
            let trial = layout.build(&trial_x);
            let trial_r = stacked_residuals(&trial, p);
            let trial_sup = linf_norm(&trial_r);
            if trial_sup.is_finite() && trial_sup <= sup {
                x = trial_x;
                current = trial;
                r = trial_r;
                sup = trial_sup;
                lambda = (lambda / 10.0).max(1e-20);
                rejected = 0;
                step_accepted = true;
            } else {
                lambda *= 10.0;
                rejected += 1;
            }
            log.push(LogEntry {
                iteration: iterations,
                residual: sup,
                damping: lambda,
                accepted: step_accepted,
            });
            if rejected >= STAGNATION_LIMIT {
                return Err(RefineError::Stagnation {
                    residual: sup,
                    iterations,
                    best: Box::new(current),
                });
            }
        }
    }
    Ok(RefineOutcome {
        tableau: current,
        initial_residual: initial,
        final_residual: sup,
        iterations,
        converged: sup <= spec.convergence_tol,
        log,
        stability: None,
    })
}

/// Rounds every coefficient of `A` and `b` to `digits` significant decimal
/// digits. Zeros stay zero and stiff-accuracy ties survive.
pub fn round_to_significant(t: &ButcherTableau<f64>, digits: usize) -> ButcherTableau<f64> {
    let digits = digits.clamp(1, 17);
    t.map_coefficients(|x| {
        if *x == 0.0 {
            0.0
        } else {
            format!("{:.*e}", digits - 1, x).parse().expect("formatted float")
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tableau::{explicit_euler, implicit_midpoint, load_builtin, theta_method};

    #[test]
    fn default_spec_partitions_the_coefficients() {
        for name in ["DIRK(6,6)A", "DIRK(8,6)SA"] {
            let t = load_builtin::<f64>(name).unwrap();
            let spec = RefineSpec::for_tableau(&t);
            spec.validate(&t).unwrap();
            let s = t.stages();
            assert_eq!(spec.fixed_pattern.len() + spec.free_variables.len(), s * s + s);
            assert_eq!(spec.tie_b_to_last_row, t.is_stiffly_accurate());
        }
    }

    #[test]
    fn overlapping_spec_is_rejected() {
        let t = load_builtin::<f64>("DIRK(6,6)A").unwrap();
        let mut spec = RefineSpec::for_tableau(&t);
        spec.fixed_pattern.push(spec.free_variables[0]);
        assert!(matches!(spec.validate(&t), Err(RefineError::Spec(_))));
        let mut spec = RefineSpec::for_tableau(&t);
        spec.target_order = 9;
        assert!(spec.validate(&t).is_err());
    }

    #[test]
    fn converged_input_is_left_alone() {
        let t = implicit_midpoint::<f64>();
        let out = polish(&t, &RefineSpec::for_tableau(&t)).unwrap();
        assert_eq!(out.iterations, 0);
        assert_eq!(out.tableau, t);
    }

    #[test]
    fn far_input_is_out_of_basin() {
        let t = theta_method::<f64>(0.3);
        let mut spec = RefineSpec::for_tableau(&t);
        spec.target_order = 2;
        assert!(matches!(
            polish(&t, &spec),
            Err(RefineError::OutOfBasin { .. })
        ));
    }

    #[test]
    fn perturbed_theta_method_polishes_back() {
        let t = theta_method::<f64>(0.5 + 1e-5);
        let mut spec = RefineSpec::for_tableau(&t);
        spec.target_order = 2;
        let mut out = polish(&t, &spec).unwrap();
        assert!(out.converged, "{out:?}");
        assert!((out.tableau.a(0, 0) - 0.5).abs() < 1e-12);
        assert!(out.log.windows(2).all(|w| w[1].residual <= w[0].residual));
        assert!(out.verify().passed());
    }

    #[test]
    fn guard_rejects_explicit_euler() {
        assert!(!a_stability_guard(&explicit_euler()).passed());
        assert!(a_stability_guard(&implicit_midpoint()).passed());
    }

    #[test]
    fn rounding_keeps_structure() {
        let t = load_builtin::<f64>("DIRK(8,6)SA").unwrap();
        let r = round_to_significant(&t, 8);
        assert!(r.is_stiffly_accurate());
        for i in 0..t.stages() {
            for j in 0..t.stages() {
                assert_eq!(t.a(i, j) == 0.0, r.a(i, j) == 0.0);
                assert!((t.a(i, j) - r.a(i, j)).abs() <= 1e-7 * t.a(i, j).abs());
            }
        }
    }
}
