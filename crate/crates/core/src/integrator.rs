//! Fixed-step DIRK integration with a Newton solve per implicit stage.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{IntegrationError, StepError};
use crate::linalg::{Factorization, JacobianStructure, LinearSolver, Matrix};
use crate::problems::{LinearTest, OdeProblem};
use crate::scalar::{dot2, two_sum, Scalar};
use crate::tableau::ButcherTableau;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum JacobianReuse {
    /// Fresh Jacobian and factorization at every Newton iteration.
    EveryIteration,
    /// One Jacobian per stage, evaluated at the initial guess.
    #[default]
    PerStage,
    /// One Jacobian per step at `(t_n, y_n)`; factorizations are shared by
    /// stages with equal diagonal coefficients.
    PerStep,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepperConfig<T> {
    pub dt: T,
    /// Newton stops once `|G(u)| <= tol (1 + |u|)` or the update satisfies the
    /// same bound (max norms).
    pub newton_tol: T,
    pub newton_max_iters: usize,
    pub jacobian_reuse: JacobianReuse,
    pub linear_solver: LinearSolver,
    /// Keep the per-iteration Newton residuals of every stage in the trace.
    pub record_newton_residuals: bool,
}

impl<T: Scalar> StepperConfig<T> {
    pub fn new(dt: T) -> Self {
        Self {
            dt,
            newton_tol: T::lit(1e-12),
            newton_max_iters: 25,
            jacobian_reuse: JacobianReuse::default(),
            linear_solver: LinearSolver::Auto,
            record_newton_residuals: false,
        }
    }

    pub fn with_dt(&self, dt: T) -> Self {
        Self { dt, ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), StepError> {
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(StepError::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.newton_tol > T::zero()) {
            return Err(StepError::Config("newton_tol must be positive".into()));
        }
        if self.newton_max_iters == 0 {
            return Err(StepError::Config("newton_max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveTrace {
    pub steps_taken: usize,
    pub total_newton_iters: usize,
    pub max_newton_iters_in_a_stage: usize,
    /// Newton iterations whose update grew compared with the previous one.
    pub divergence_events: usize,
    pub jacobian_evaluations: usize,
    pub factorizations: usize,
    /// The last step was shortened to land on `t_end`.
    pub final_step_shortened: bool,
    /// For stiffly accurate tableaus: largest relative gap between the
    /// quadrature update and the last stage.
    pub max_sa_discrepancy: f64,
    /// `|G|` per Newton iteration, one entry per implicit stage solve (only
    /// when requested in the config).
    pub newton_residuals: Vec<Vec<f64>>,
}

impl SolveTrace {
    fn absorb(&mut self, other: SolveTrace) {
        self.steps_taken += other.steps_taken;
        self.total_newton_iters += other.total_newton_iters;
        self.max_newton_iters_in_a_stage = self
            .max_newton_iters_in_a_stage
            .max(other.max_newton_iters_in_a_stage);
        self.divergence_events += other.divergence_events;
        self.jacobian_evaluations += other.jacobian_evaluations;
        self.factorizations += other.factorizations;
        self.max_sa_discrepancy = self.max_sa_discrepancy.max(other.max_sa_discrepancy);
        self.newton_residuals.extend(other.newton_residuals);
    }
}

fn max_norm<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// Reusable stepping state for one tableau and one problem.
pub struct Stepper<'a, T: Scalar, P: OdeProblem<T> + ?Sized> {
    tableau: &'a ButcherTableau<T>,
    problem: &'a P,
    cfg: StepperConfig<T>,
    structure: JacobianStructure,
    n: usize,
    jac: Matrix<T>,
    jac_norm: T,
    stages: Vec<Vec<T>>,
}

impl<'a, T: Scalar, P: OdeProblem<T> + ?Sized> Stepper<'a, T, P> {
    pub fn new(
        tableau: &'a ButcherTableau<T>,
        problem: &'a P,
        cfg: &StepperConfig<T>,
    ) -> Result<Self, StepError> {
        cfg.validate()?;
        if !tableau.is_dirk() {
            return Err(StepError::NotDirk(tableau.name().to_string()));
        }
        let provided = problem.jacobian_structure();
        let structure = cfg
            .linear_solver
            .resolve(provided)
            .map_err(|source| StepError::LinearSolve { stage: 0, source })?;
        let n = problem.dimension();
        Ok(Self {
            tableau,
            problem,
            cfg: cfg.clone(),
            structure,
            n,
            jac: Matrix::zeros(provided, n),
            jac_norm: T::zero(),
            stages: vec![vec![T::zero(); n]; tableau.stages()],
        })
    }

    fn evaluate_jacobian(&mut self, t: T, y: &[T], trace: &mut SolveTrace) {
        self.jac.fill_zero();
        self.problem.jacobian(t, y, &mut self.jac);
        self.jac_norm = self.jac.norm_inf();
        trace.jacobian_evaluations += 1;
    }

    fn factor(&self, gamma: T, stage: usize, trace: &mut SolveTrace) -> Result<Factorization<T>, StepError> {
        let m = if self.jac.structure() == self.structure {
            self.jac.identity_minus(gamma)
        } else {
            self.jac.convert(self.structure).identity_minus(gamma)
        };
        trace.factorizations += 1;
        m.factor()
            .map_err(|source| StepError::LinearSolve { stage: stage + 1, source })
    }

    /// Advances `yn` by one step of size `h`.
    pub fn step(&mut self, tn: T, yn: &[T], h: T, trace: &mut SolveTrace) -> Result<Vec<T>, StepError> {
        let d = self.step_increment(tn, yn, h, trace)?;
        Ok(yn.iter().zip(&d).map(|(y, d)| *y + *d).collect())
    }

    /// The update `h sum_i b_i k_i` of one step, without adding it to `yn`.
    pub fn step_increment(
        &mut self,
        tn: T,
        yn: &[T],
        h: T,
        trace: &mut SolveTrace,
    ) -> Result<Vec<T>, StepError> {
        let t = self.tableau;
        let s = t.stages();
        let n = self.n;
        let tol = self.cfg.newton_tol;
        let mut per_step: Vec<(T, Factorization<T>)> = Vec::new();
        if self.cfg.jacobian_reuse == JacobianReuse::PerStep && (0..s).any(|i| !t.a(i, i).is_zero()) {
            self.evaluate_jacobian(tn, yn, trace);
        }
        let mut known = vec![T::zero(); n];
        let mut g = vec![T::zero(); n];
        let mut fu = vec![T::zero(); n];
        let mut last_stage = yn.to_vec();
        for i in 0..s {
            known.copy_from_slice(yn);
            for j in 0..i {
                let a = t.a(i, j);
                if !a.is_zero() {
                    let ha = h * a;
                    for (kn, kj) in known.iter_mut().zip(&self.stages[j]) {
                        *kn += ha * *kj;
                    }
                }
            }
            let ti = tn + t.c()[i] * h;
            let aii = t.a(i, i);
            if aii.is_zero() {
                let mut k = vec![T::zero(); n];
                self.problem.rhs(ti, &known, &mut k);
                self.stages[i] = k;
                last_stage.copy_from_slice(&known);
                continue;
            }
            let gamma = h * aii;
            let mut u = known.clone();
            let mut fact: Option<Factorization<T>> = None;
            let mut converged = false;
            let mut iters = 0;
            let mut last_residual = T::infinity();
            let mut prev_update = T::infinity();
            let mut history = Vec::new();
            for it in 1..=self.cfg.newton_max_iters + 1 {
                self.problem.rhs(ti, &u, &mut fu);
                for r in 0..n {
                    g[r] = u[r] - gamma * fu[r] - known[r];
                }
                let gnorm = max_norm(&g);
                last_residual = gnorm;
                if self.cfg.record_newton_residuals {
                    history.push(gnorm.as_f64());
                }
                if it > 1 && gnorm <= tol * (T::one() + max_norm(&u)) {
                    converged = true;
                    break;
                }
                if it > self.cfg.newton_max_iters {
                    break;
                }
                iters = it;
                let solver = match self.cfg.jacobian_reuse {
                    JacobianReuse::EveryIteration => {
                        self.evaluate_jacobian(ti, &u, trace);
                        fact = Some(self.factor(gamma, i, trace)?);
                        fact.as_ref().unwrap()
                    }
                    JacobianReuse::PerStage => {
                        if fact.is_none() {
                            self.evaluate_jacobian(ti, &u, trace);
                            fact = Some(self.factor(gamma, i, trace)?);
                        }
                        fact.as_ref().unwrap()
                    }
                    JacobianReuse::PerStep => {
                        let pos = match per_step.iter().position(|(gm, _)| *gm == gamma) {
                            Some(p) => p,
                            None => {
                                let f = self.factor(gamma, i, trace)?;
                                per_step.push((gamma, f));
                                per_step.len() - 1
                            }
                        };
                        &per_step[pos].1
                    }
                };
                let mut delta: Vec<T> = g.iter().map(|x| -*x).collect();
                solver.solve(&mut delta);
                for (ur, dr) in u.iter_mut().zip(&delta) {
                    *ur += *dr;
                }
                let dnorm = max_norm(&delta);
                if !dnorm.is_finite() {
                    break;
                }
                if dnorm > prev_update {
                    trace.divergence_events += 1;
                }
                prev_update = dnorm;
                if dnorm <= tol * (T::one() + max_norm(&u)) {
                    converged = true;
                    break;
                }
            }
            trace.total_newton_iters += iters;
            trace.max_newton_iters_in_a_stage = trace.max_newton_iters_in_a_stage.max(iters);
            if self.cfg.record_newton_residuals {
                trace.newton_residuals.push(history);
            }
            if !converged {
                return Err(StepError::NewtonFailure {
                    stage: i + 1,
                    iterations: iters,
                    residual: last_residual.as_f64(),
                });
            }
            if gamma.abs() * self.jac_norm > T::one() {
                let inv = T::one() / gamma;
                for r in 0..n {
                    self.stages[i][r] = (u[r] - known[r]) * inv;
                }
            } else {
                let mut k = std::mem::take(&mut self.stages[i]);
                self.problem.rhs(ti, &u, &mut k);
                self.stages[i] = k;
            }
            last_stage.copy_from_slice(&u);
        }
        let hb: Vec<T> = t.b().iter().map(|b| h * *b).collect();
        let mut terms = vec![T::zero(); s];
        let mut d = vec![T::zero(); n];
        for (r, dr) in d.iter_mut().enumerate() {
            for (i, term) in terms.iter_mut().enumerate() {
                *term = self.stages[i][r];
            }
            *dr = dot2(&hb, &terms);
        }
        trace.steps_taken += 1;
        if t.is_stiffly_accurate() {
            let diff: Vec<T> = (0..n).map(|r| yn[r] + d[r] - last_stage[r]).collect();
            let scale = max_norm(&last_stage);
            let gap = if scale > T::zero() {
                max_norm(&diff) / scale
            } else {
                max_norm(&diff)
            };
            trace.max_sa_discrepancy = trace.max_sa_discrepancy.max(gap.as_f64());
        }
        Ok(d)
    }
}

/// One DIRK step of size `cfg.dt` from `(tn, yn)`.
pub fn dirk_step<T: Scalar, P: OdeProblem<T> + ?Sized>(
    t: &ButcherTableau<T>,
    f: &P,
    tn: T,
    yn: &[T],
    cfg: &StepperConfig<T>,
) -> Result<(Vec<T>, SolveTrace), StepError> {
    let mut stepper = Stepper::new(t, f, cfg)?;
    let mut trace = SolveTrace::default();
    let y = stepper.step(tn, yn, cfg.dt, &mut trace)?;
    Ok((y, trace))
}

/// Step grid from `t0` to `t_end`: the number of full steps and the size of a
/// trailing shortened step, if any.
fn step_plan<T: Scalar>(t0: T, t_end: T, dt: T) -> (usize, Option<T>) {
    let span = t_end - t0;
    if span <= T::zero() {
        return (0, None);
    }
    let ratio = span / dt;
    let n = ratio.round();
    if n >= T::one() && (ratio - n).abs() <= T::lit(4.0) * T::epsilon() * n {
        return (n.to_usize().unwrap(), None);
    }
    let full = ratio.floor();
    let rest = t_end - (t0 + full * dt);
    if rest > T::zero() {
        (full.to_usize().unwrap(), Some(rest))
    } else {
        (full.to_usize().unwrap(), None)
    }
}

/// Integrates from `(t0, y0)` to `t_end` with fixed steps, calling `observe`
/// after every step with the new time and state.
pub fn integrate_observed<T: Scalar, P: OdeProblem<T> + ?Sized>(
    t: &ButcherTableau<T>,
    f: &P,
    t0: T,
    y0: &[T],
    t_end: T,
    cfg: &StepperConfig<T>,
    mut observe: impl FnMut(T, &[T]),
) -> Result<(Vec<T>, SolveTrace), IntegrationError> {
    let fail = |step: usize, time: T, source: StepError| IntegrationError {
        step,
        time: time.as_f64(),
        source,
    };
    if t_end < t0 {
        return Err(fail(0, t0, StepError::Config("t_end precedes t0".into())));
    }
    let mut stepper = Stepper::new(t, f, cfg).map_err(|e| fail(0, t0, e))?;
    let mut trace = SolveTrace::default();
    let (full, rest) = step_plan(t0, t_end, cfg.dt);
    let mut y = y0.to_vec();
    // Low-order parts of y carried across steps.
    let mut carry = vec![T::zero(); y.len()];
    let mut advance = |y: &mut Vec<T>, d: Vec<T>| {
        for ((yr, cr), dr) in y.iter_mut().zip(carry.iter_mut()).zip(d) {
            let (hi, lo) = two_sum(*yr, dr + *cr);
            *yr = hi;
            *cr = lo;
        }
    };
    let mut local = SolveTrace::default();
    for k in 0..full {
        let tk = t0 + T::from_usize(k).unwrap() * cfg.dt;
        let d = stepper
            .step_increment(tk, &y, cfg.dt, &mut local)
            .map_err(|e| fail(k, tk, e))?;
        advance(&mut y, d);
        let t_next = if k + 1 == full && rest.is_none() {
            t_end
        } else {
            t0 + T::from_usize(k + 1).unwrap() * cfg.dt
        };
        observe(t_next, &y);
    }
    if let Some(h) = rest {
        let tk = t_end - h;
        let d = stepper
            .step_increment(tk, &y, h, &mut local)
            .map_err(|e| fail(full, tk, e))?;
        advance(&mut y, d);
        trace.final_step_shortened = true;
        observe(t_end, &y);
    }
    trace.absorb(local);
    Ok((y, trace))
}

pub fn integrate<T: Scalar, P: OdeProblem<T> + ?Sized>(
    t: &ButcherTableau<T>,
    f: &P,
    t0: T,
    y0: &[T],
    t_end: T,
    cfg: &StepperConfig<T>,
) -> Result<(Vec<T>, SolveTrace), IntegrationError> {
    integrate_observed(t, f, t0, y0, t_end, cfg, |_, _| {})
}

/// Adds independent uniform noise in `[-eps, eps]` to every structurally
/// nonzero entry of `A` and `b`; `c` is recomputed from the perturbed rows.
pub fn perturb_tableau(t: &ButcherTableau<f64>, eps: f64, rng: &mut impl Rng) -> ButcherTableau<f64> {
    let s = t.stages();
    let mut noise = |v: f64| {
        if v == 0.0 || eps == 0.0 {
            v
        } else {
            v + eps * rng.random_range(-1.0..=1.0)
        }
    };
    let rows: Vec<Vec<f64>> = (0..s).map(|i| (0..s).map(|j| noise(t.a(i, j))).collect()).collect();
    let b: Vec<f64> = t.b().iter().map(|&v| noise(v)).collect();
    ButcherTableau::new(format!("{} (perturbed)", t.name()), t.order(), rows, b)
        .expect("perturbation keeps dimensions")
}

/// Runs `y' = lambda y` for `n_steps` steps of size `dt` with the exact and a
/// perturbed copy of the tableau and returns `max_n |y~_n - y_n| / |y_n|`.
pub fn perturbation_experiment(
    t: &ButcherTableau<f64>,
    eps_scale: f64,
    lambda: Complex<f64>,
    dt: f64,
    n_steps: usize,
    seed: u64,
) -> Result<f64, IntegrationError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let perturbed = perturb_tableau(t, eps_scale, &mut rng);
    let problem = LinearTest::new(lambda);
    let cfg = StepperConfig::new(dt);
    let t_end = dt * n_steps as f64;
    let run = |tab: &ButcherTableau<f64>| -> Result<Vec<Complex<f64>>, IntegrationError> {
        let mut out = Vec::with_capacity(n_steps);
        let y0: Vec<f64> = problem.initial_value();
        integrate_observed(tab, &problem, 0.0, &y0, t_end, &cfg, |_, y| {
            out.push(LinearTest::as_complex(y))
        })?;
        Ok(out)
    };
    let exact = run(t)?;
    let noisy = run(&perturbed)?;
    Ok(exact
        .iter()
        .zip(&noisy)
        .map(|(a, b)| {
            let d = (a - b).norm();
            if a.norm() > 0.0 {
                d / a.norm()
            } else {
                d
            }
        })
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{Kaps, VanDerPol};
    use crate::stability::stability_polynomials;
    use crate::tableau::{explicit_euler, implicit_midpoint, load_builtin};

    struct Zero;
    impl OdeProblem<f64> for Zero {
        fn name(&self) -> String {
            "zero".into()
        }
        fn dimension(&self) -> usize {
            3
        }
        fn rhs(&self, _t: f64, _y: &[f64], dy: &mut [f64]) {
            dy.fill(0.0);
        }
        fn jacobian(&self, _t: f64, _y: &[f64], _jac: &mut Matrix<f64>) {}
        fn initial_value(&self) -> Vec<f64> {
            vec![1.0, -2.0, 3.5]
        }
        fn interval(&self) -> (f64, f64) {
            (0.0, 1.0)
        }
    }

    #[test]
    fn constant_solution_is_exact() {
        for t in crate::tableau::all_builtins::<f64>() {
            let y0 = Zero.initial_value();
            let (y, _) = dirk_step(&t, &Zero, 0.0, &y0, &StepperConfig::new(0.3)).unwrap();
            assert_eq!(y, y0);
        }
    }

    #[test]
    fn midpoint_linear_step() {
        let p = LinearTest::real(-1.0);
        let (y, _) = dirk_step(&implicit_midpoint::<f64>(), &p, 0.0, &[1.0], &StepperConfig::new(0.1)).unwrap();
        assert!((y[0] - 0.95 / 1.05).abs() < 1e-15);
        assert!((y[0] - 0.904761904761905).abs() < 1e-15);
    }

    #[test]
    fn builtins_reproduce_stability_function() {
        for t in crate::tableau::all_builtins::<f64>() {
            let polys = stability_polynomials(&t);
            for z in [Complex::new(-1.0, 0.0), Complex::new(-10.0, 10.0), Complex::new(-100.0, 0.0)] {
                let dt = 0.5;
                let p = LinearTest::new(z / dt);
                let y0: Vec<f64> = p.initial_value();
                let (y, _) = dirk_step(&t, &p, 0.0, &y0, &StepperConfig::new(dt)).unwrap();
                let got = LinearTest::as_complex(&y);
                let want = polys.eval(z);
                assert!((got - want).norm() <= 1e-12 * want.norm().max(1e-300), "{} {z}: {got} {want}", t.name());
            }
        }
    }

    #[test]
    fn exponential_decay_with_six_stage_scheme() {
        let t = load_builtin::<f64>("DIRK(6,6)A").unwrap();
        let p = LinearTest::real(-1.0);
        let (y, trace) = integrate(&t, &p, 0.0, &[1.0], 1.0, &StepperConfig::new(0.1)).unwrap();
        assert!((y[0] - (-1f64).exp()).abs() <= 1e-8);
        assert_eq!(trace.steps_taken, 10);
        assert!(!trace.final_step_shortened);
    }

    #[test]
    fn zero_length_and_shortened_final_step() {
        let t = implicit_midpoint::<f64>();
        let p = LinearTest::real(-1.0);
        let (y, trace) = integrate(&t, &p, 0.5, &[2.0], 0.5, &StepperConfig::new(0.1)).unwrap();
        assert_eq!(y, vec![2.0]);
        assert_eq!(trace.steps_taken, 0);
        let (_, trace) = integrate(&t, &p, 0.0, &[1.0], 0.25, &StepperConfig::new(0.1)).unwrap();
        assert_eq!(trace.steps_taken, 3);
        assert!(trace.final_step_shortened);
    }

    #[test]
    fn kaps_stiffly_accurate_step() {
        let t = load_builtin::<f64>("DIRK(15,8)SA").unwrap();
        let p = Kaps::default();
        let y0: Vec<f64> = p.initial_value();
        let (y, trace) = integrate(&t, &p, 0.0, &y0, 1.0, &StepperConfig::new(0.01)).unwrap();
        let exact = [(-2f64).exp(), (-1f64).exp()];
        assert!((y[0] - exact[0]).abs() < 1e-10 && (y[1] - exact[1]).abs() < 1e-10);
        assert!(trace.max_sa_discrepancy <= 1e-12, "{}", trace.max_sa_discrepancy);
    }

    #[test]
    fn every_iteration_newton_is_quadratic() {
        let t = load_builtin::<f64>("DIRK(6,6)A").unwrap();
        let p = VanDerPol::default();
        let mut cfg = StepperConfig::new(1e-3);
        cfg.jacobian_reuse = JacobianReuse::EveryIteration;
        cfg.record_newton_residuals = true;
        cfg.newton_tol = 1e-15;
        let y0: Vec<f64> = p.initial_value();
        let (_, trace) = integrate(&t, &p, 0.0, &y0, 0.01, &cfg).unwrap();
        let mut checked = 0;
        for h in &trace.newton_residuals {
            for w in h.windows(2) {
                if w[0] < 1e-4 && w[1] > 1e-13 {
                    assert!(w[1] <= w[0] / 10.0, "{h:?}");
                    checked += 1;
                }
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn reuse_policies_agree() {
        let t = load_builtin::<f64>("DIRK(9,7)A").unwrap();
        let p = VanDerPol::default();
        let y0: Vec<f64> = p.initial_value();
        let mut results = Vec::new();
        for reuse in [JacobianReuse::EveryIteration, JacobianReuse::PerStage, JacobianReuse::PerStep] {
            let mut cfg = StepperConfig::new(1e-2);
            cfg.jacobian_reuse = reuse;
            results.push(integrate(&t, &p, 0.0, &y0, 0.5, &cfg).unwrap().0);
        }
        for r in &results[1..] {
            assert!((r[0] - results[0][0]).abs() < 1e-9 && (r[1] - results[0][1]).abs() < 1e-9);
        }
    }

    #[test]
    fn newton_failure_reports_stage() {
        let t = load_builtin::<f64>("DIRK(6,6)A").unwrap();
        let p = VanDerPol::default();
        let mut cfg = StepperConfig::new(5.0);
        cfg.newton_max_iters = 1;
        let y0: Vec<f64> = p.initial_value();
        match dirk_step(&t, &p, 0.0, &y0, &cfg) {
            Err(StepError::NewtonFailure { stage, iterations, .. }) => {
                assert!(stage >= 1);
                assert_eq!(iterations, 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_bad_config_and_explicit_only_tableau_runs() {
        let p = LinearTest::real(-1.0);
        assert!(matches!(
            dirk_step(&implicit_midpoint(), &p, 0.0, &[1.0], &StepperConfig::new(0.0)),
            Err(StepError::Config(_))
        ));
        let (y, trace) = dirk_step(&explicit_euler(), &p, 0.0, &[1.0], &StepperConfig::new(0.1)).unwrap();
        assert_eq!(y, vec![0.9]);
        assert_eq!(trace.total_newton_iters, 0);
    }

    #[test]
    fn perturbation_zero_noise_is_exact() {
        let t = load_builtin::<f64>("DIRK(6,6)A").unwrap();
        let d = perturbation_experiment(&t, 0.0, Complex::new(-1.0, 0.0), 0.1, 50, 1).unwrap();
        assert_eq!(d, 0.0);
        let d = perturbation_experiment(&t, 1e-13, Complex::new(-1.0, 0.0), 0.1, 1000, 1).unwrap();
        assert!(d <= 1e-7 && d > 0.0, "{d}");
        let again = perturbation_experiment(&t, 1e-13, Complex::new(-1.0, 0.0), 0.1, 1000, 1).unwrap();
        assert_eq!(d, again);
    }
}
