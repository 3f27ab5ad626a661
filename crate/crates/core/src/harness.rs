//! Convergence studies: step-size sweeps, reference solutions and slope fits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::HarnessError;
use crate::integrator::{integrate, StepperConfig};
use crate::problems::{ErrorNorm, OdeProblem};
use crate::tableau::{load_builtin, ButcherTableau};

/// Scheme used for reference solutions.
pub const REFERENCE_SCHEME: &str = "DIRK(15,8)SA";
/// Required agreement of the two reference runs, in the problem norm.
pub const REFERENCE_TOL: f64 = 1e-12;
/// Reference step is the smallest experiment step divided by this.
pub const REFERENCE_REFINEMENT: f64 = 20.0;
/// Upper error bound of the slope window.
pub const WINDOW_ERROR_MAX: f64 = 1e-2;
/// Lower error bound of the slope window, in units of `eps * scale`.
pub const WINDOW_ROUNDOFF_FACTOR: f64 = 100.0;

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergencePoint {
    pub dt: f64,
    /// `None` when the integration failed at this step size.
    pub error: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceResult {
    pub scheme: String,
    pub problem: String,
    pub norm: ErrorNorm,
    /// Strictly decreasing in `dt`.
    pub points: Vec<ConvergencePoint>,
    pub fitted_slope: Option<f64>,
    pub slope_window: Option<(f64, f64)>,
    pub notes: Vec<String>,
}

impl ConvergenceResult {
    /// Successful `(dt, error)` pairs with a positive, finite error.
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .filter_map(|p| p.error.filter(|e| *e > 0.0 && e.is_finite()).map(|e| (p.dt, e)))
            .collect()
    }

    pub fn error_at(&self, dt: f64) -> Option<f64> {
        self.points.iter().find(|p| p.dt == dt).and_then(|p| p.error)
    }

    /// Rows of `scheme,problem,dt,error,norm` (no header).
    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        for p in &self.points {
            let err = p.error.map_or_else(|| "NaN".to_string(), |e| format!("{e:.6e}"));
            let _ = writeln!(
                out,
                "{},{},{:.6e},{},{}",
                csv_field(&self.scheme),
                csv_field(&self.problem),
                p.dt,
                err,
                self.norm.name()
            );
        }
        out
    }

    pub fn to_csv(&self) -> String {
        format!("{CSV_HEADER}\n{}", self.csv_rows())
    }

    pub fn slope_row(&self) -> String {
        let (lo, hi) = self.slope_window.unwrap_or((f64::NAN, f64::NAN));
        format!(
            "{},{},{},{:.6e},{:.6e},{}",
            csv_field(&self.scheme),
            csv_field(&self.problem),
            self.fitted_slope.map_or_else(|| "NaN".into(), |s| format!("{s:.4}")),
            lo,
            hi,
            self.pairs()
                .iter()
                .filter(|(dt, _)| *dt >= lo && *dt <= hi)
                .count()
        )
    }
}

/// Quotes a CSV field when it contains a comma or a quote; scheme names such
/// as `DIRK(6,6)A` do.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub const CSV_HEADER: &str = "scheme,problem,dt,error,norm";
pub const SLOPE_CSV_HEADER: &str = "scheme,problem,slope,dt_min,dt_max,points";

/// Least-squares slope of `log(error)` against `log(dt)` over the points with
/// `dt` in `[window.0, window.1]`. Non-positive or non-finite errors are skipped.
pub fn fit_slope(points: &[(f64, f64)], window: (f64, f64)) -> Result<f64, HarnessError> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|(dt, e)| *dt >= window.0 && *dt <= window.1 && *e > 0.0 && e.is_finite())
        .map(|(dt, e)| (dt.ln(), e.ln()))
        .unzip();
    let n = xs.len();
    if n < 2 {
        return Err(HarnessError::InsufficientData(n));
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(HarnessError::InsufficientData(1));
    }
    Ok(sxy / sxx)
}

/// The `dt` range whose errors lie between the roundoff floor and
/// [`WINDOW_ERROR_MAX`], further capped by `dt_bound` (exclusive).
pub fn asymptotic_window(points: &[(f64, f64)], scale: f64, dt_bound: Option<f64>) -> Option<(f64, f64)> {
    let floor = WINDOW_ROUNDOFF_FACTOR * f64::EPSILON * scale.max(1.0);
    let inside: Vec<f64> = points
        .iter()
        .filter(|(dt, e)| *e >= floor && *e <= WINDOW_ERROR_MAX && dt_bound.is_none_or(|b| *dt < b))
        .map(|(dt, _)| *dt)
        .collect();
    if inside.len() < 2 {
        return None;
    }
    let lo = inside.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = inside.iter().cloned().fold(0.0, f64::max);
    Some((lo, hi))
}

fn sorted_dts(dts: &[f64]) -> Result<Vec<f64>, HarnessError> {
    let mut v: Vec<f64> = dts.iter().copied().filter(|d| *d > 0.0 && d.is_finite()).collect();
    if v.is_empty() {
        return Err(HarnessError::NoStepSizes);
    }
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    v.dedup();
    Ok(v)
}

/// Where errors are measured from.
#[derive(Clone, Debug, PartialEq)]
pub enum Target {
    /// The problem's exact solution at `t_end`.
    Exact,
    Reference(Vec<f64>),
}

fn target_state<P: OdeProblem<f64> + ?Sized>(problem: &P, target: &Target) -> Vec<f64> {
    match target {
        Target::Exact => problem
            .exact_solution(problem.interval().1)
            .expect("Target::Exact requires an exact solution"),
        Target::Reference(y) => y.clone(),
    }
}

/// One integration per step size (in parallel) with errors against `target`.
pub fn run_convergence_against<P: OdeProblem<f64> + ?Sized>(
    scheme: &ButcherTableau<f64>,
    problem: &P,
    dts: &[f64],
    cfg: &StepperConfig<f64>,
    target: &Target,
) -> Result<ConvergenceResult, HarnessError> {
    let dts = sorted_dts(dts)?;
    let (t0, t_end) = problem.interval();
    let y0 = problem.initial_value();
    let want = target_state(problem, target);
    let norm = problem.error_norm();
    let points: Vec<ConvergencePoint> = dts
        .par_iter()
        .map(|&dt| match integrate(scheme, problem, t0, &y0, t_end, &cfg.with_dt(dt)) {
            Ok((y, _)) => {
                let e = norm.distance(&y, &want);
                if e.is_finite() {
                    ConvergencePoint {
                        dt,
                        error: Some(e),
                        failure: None,
                    }
                } else {
                    ConvergencePoint {
                        dt,
                        error: None,
                        failure: Some("non-finite solution".into()),
                    }
                }
            }
            Err(err) => ConvergencePoint {
                dt,
                error: None,
                failure: Some(err.to_string()),
            },
        })
        .collect();
    let mut result = ConvergenceResult {
        scheme: scheme.name().to_string(),
        problem: problem.name(),
        norm,
        points,
        fitted_slope: None,
        slope_window: None,
        notes: Vec::new(),
    };
    for p in &result.points {
        match (&p.error, &p.failure) {
            (Some(e), _) if *e == 0.0 => result
                .notes
                .push(format!("dt = {:e}: zero error excluded from the fit", p.dt)),
            (None, Some(f)) => result.notes.push(format!("dt = {:e}: failed ({f})", p.dt)),
            _ => {}
        }
    }
    let scale = norm.norm(&want);
    let pairs = result.pairs();
    result.slope_window = asymptotic_window(&pairs, scale, problem.asymptotic_dt_bound());
    if let Some(w) = result.slope_window {
        result.fitted_slope = fit_slope(&pairs, w).ok();
    } else {
        result
            .notes
            .push("fewer than two points in the asymptotic window".into());
    }
    Ok(result)
}

/// Sweep against the exact solution when the problem has one, otherwise
/// against a reference computed by [`reference_solution`] (uncached).
pub fn run_convergence<P: OdeProblem<f64> + ?Sized>(
    scheme: &ButcherTableau<f64>,
    problem: &P,
    dts: &[f64],
    cfg: &StepperConfig<f64>,
) -> Result<ConvergenceResult, HarnessError> {
    let target = if problem.has_exact_solution() {
        Target::Exact
    } else {
        let dt_min = sorted_dts(dts)?.last().copied().unwrap();
        Target::Reference(reference_solution(problem, cfg, dt_min, None)?)
    };
    run_convergence_against(scheme, problem, dts, cfg, &target)
}

/// Integrates `problem` with [`REFERENCE_SCHEME`] at `dt_min / 20` and at half
/// that, requires agreement to [`REFERENCE_TOL`] in the problem norm, and
/// returns the finer result. With `cache_dir` set, a previously stored
/// reference for the same problem parameters is returned instead, and new
/// references are stored there.
pub fn reference_solution<P: OdeProblem<f64> + ?Sized>(
    problem: &P,
    cfg: &StepperConfig<f64>,
    dt_min: f64,
    cache_dir: Option<&Path>,
) -> Result<Vec<f64>, HarnessError> {
    let cache = cache_dir.map(ReferenceCache::new);
    let key = problem.cache_key();
    let dt = dt_min / REFERENCE_REFINEMENT;
    if let Some(c) = &cache {
        if let Some((stored_dt, y)) = c.load(&key)? {
            if stored_dt <= dt / 2.0 * (1.0 + 1e-12) && y.len() == problem.dimension() {
                return Ok(y);
            }
        }
    }
    let scheme = load_builtin::<f64>(REFERENCE_SCHEME).expect("reference scheme is builtin");
    let (t0, t_end) = problem.interval();
    let y0 = problem.initial_value();
    let (coarse, fine) = rayon::join(
        || integrate(&scheme, problem, t0, &y0, t_end, &cfg.with_dt(dt)),
        || integrate(&scheme, problem, t0, &y0, t_end, &cfg.with_dt(dt / 2.0)),
    );
    let (coarse, fine) = (coarse?.0, fine?.0);
    let difference = problem.error_norm().distance(&coarse, &fine);
    if !(difference <= REFERENCE_TOL) {
        return Err(HarnessError::ReferenceQuality {
            difference,
            tolerance: REFERENCE_TOL,
            coarse,
            fine,
        });
    }
    if let Some(c) = &cache {
        c.store(&key, dt / 2.0, &fine)?;
    }
    Ok(fine)
}

/// Text-file store of reference states, one file per problem key.
#[derive(Clone, Debug)]
pub struct ReferenceCache {
    dir: PathBuf,
}

impl ReferenceCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.ref"))
    }

    /// The stored step size and state for `key`, if present.
    pub fn load(&self, key: &str) -> Result<Option<(f64, Vec<f64>)>, HarnessError> {
        let path = self.path(key);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let bad = |message: String| HarnessError::Cache {
            path: path.display().to_string(),
            message,
        };
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next() {
            Some(l) if l.trim() == format!("# {key}") => {}
            other => return Err(bad(format!("unexpected header {other:?}"))),
        }
        let mut values = Vec::new();
        let mut expected = None;
        let mut dt = None;
        for line in lines {
            let line = line.trim();
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if let Some(n) = rest.strip_prefix("len ") {
                    expected = Some(n.parse::<usize>().map_err(|e| bad(e.to_string()))?);
                } else if let Some(h) = rest.strip_prefix("dt ") {
                    dt = Some(h.parse::<f64>().map_err(|e| bad(e.to_string()))?);
                }
                continue;
            }
            values.push(line.parse::<f64>().map_err(|e| bad(format!("`{line}`: {e}")))?);
        }
        if expected != Some(values.len()) {
            return Err(bad(format!("expected {expected:?} values, found {}", values.len())));
        }
        let dt = dt.ok_or_else(|| bad("missing step size".into()))?;
        Ok(Some((dt, values)))
    }

    /// Writes through a temporary file and a rename so readers never see a
    /// partial file.
    pub fn store(&self, key: &str, dt: f64, y: &[f64]) -> Result<(), HarnessError> {
        fs::create_dir_all(&self.dir)?;
        let mut text = format!("# {key}\n# dt {dt:.16e}\n# len {}\n", y.len());
        for v in y {
            let _ = writeln!(text, "{v:.16e}");
        }
        let tmp = self.dir.join(format!(".{key}.{}.tmp", std::process::id()));
        fs::write(&tmp, text)?;
        fs::rename(&tmp, self.path(key))?;
        Ok(())
    }
}

/// Sweeps several schemes on one problem, parallel over `(scheme, dt)` pairs.
pub fn run_sweep<P: OdeProblem<f64> + ?Sized>(
    schemes: &[ButcherTableau<f64>],
    problem: &P,
    dts: &[f64],
    cfg: &StepperConfig<f64>,
    target: &Target,
) -> Result<Vec<ConvergenceResult>, HarnessError> {
    schemes
        .par_iter()
        .map(|s| run_convergence_against(s, problem, dts, cfg, target))
        .collect()
}

/// Halving sequence `dt_max, dt_max/2, ..` with `count` entries.
pub fn halving(dt_max: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| dt_max / 2f64.powi(k as i32)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{Kaps, LinearTest, VanDerPol};
    use crate::tableau::implicit_midpoint;

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_field("heat"), "heat");
        assert_eq!(csv_field("DIRK(6,6)A"), "\"DIRK(6,6)A\"");
        assert_eq!(csv_field("a\"b"), "\"a\"\"b\"");
    }

    #[test]
    fn exact_power_laws() {
        let s = fit_slope(&[(0.1, 1e-6), (0.05, 1e-6 / 64.0)], (0.0, 1.0)).unwrap();
        assert!((s - 6.0).abs() < 1e-12);
        let pts: Vec<(f64, f64)> = halving(0.2, 6).iter().map(|&h| (h, 3.0 * h.powi(8))).collect();
        assert!((fit_slope(&pts, (0.0, 1.0)).unwrap() - 8.0).abs() < 1e-12);
        assert!(matches!(
            fit_slope(&pts, (1.0, 2.0)),
            Err(HarnessError::InsufficientData(0))
        ));
    }

    #[test]
    fn window_excludes_roundoff_and_large_errors() {
        let pts = [(1.0, 0.5), (0.5, 1e-3), (0.25, 1e-5), (0.125, 1e-15)];
        assert_eq!(asymptotic_window(&pts, 1.0, None), Some((0.25, 0.5)));
        assert_eq!(asymptotic_window(&pts, 1.0, Some(0.3)), None);
    }

    #[test]
    fn ratios_on_scalar_decay() {
        let p = LinearTest::real(-1.0);
        let r = run_convergence(&implicit_midpoint(), &p, &halving(0.1, 4), &StepperConfig::new(0.1)).unwrap();
        let e: Vec<f64> = r.pairs().iter().map(|x| x.1).collect();
        for w in e.windows(2) {
            assert!((w[0] / w[1] / 4.0 - 1.0).abs() < 0.1);
        }
        assert!((r.fitted_slope.unwrap() - 2.0).abs() < 0.05);
        assert!(r.to_csv().starts_with("scheme,problem,dt,error,norm\nimplicit-midpoint,linear-test,1.0"));
    }

    #[test]
    fn failed_points_recorded() {
        let t = load_builtin::<f64>("DIRK(6,6)A").unwrap();
        let mut cfg = StepperConfig::new(1.0);
        cfg.newton_max_iters = 1;
        let p = VanDerPol::default();
        let r = run_convergence_against(&t, &p, &[5.0, 2.5], &cfg, &Target::Reference(vec![0.0, 0.0])).unwrap();
        assert!(r.points.iter().all(|p| p.error.is_none() && p.failure.is_some()));
        assert!(r.csv_rows().contains("NaN"));
    }

    #[test]
    fn parallel_matches_serial() {
        let t = load_builtin::<f64>("DIRK(10,7)SA").unwrap();
        let p = Kaps::default();
        let dts = [0.2, 0.1, 0.05];
        let cfg = StepperConfig::new(0.1);
        let par = run_convergence(&t, &p, &dts, &cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let ser = pool.install(|| run_convergence(&t, &p, &dts, &cfg).unwrap());
        assert_eq!(par, ser);
    }

    #[test]
    fn cache_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ReferenceCache::new(dir.path());
        let y = vec![0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, f64::MIN_POSITIVE];
        cache.store("k", 1e-3, &y).unwrap();
        assert_eq!(cache.load("k").unwrap().unwrap(), (1e-3, y));
        assert_eq!(cache.load("missing").unwrap(), None);
        fs::write(cache.path("bad"), "# bad\n# len 2\n1.0\n").unwrap();
        assert!(matches!(cache.load("bad"), Err(HarnessError::Cache { .. })));
    }
}
