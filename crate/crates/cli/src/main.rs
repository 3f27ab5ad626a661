use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dirk::conditions::{verify_order, DEFAULT_ORDER_TOL};
use dirk::harness::{csv_field, halving, run_sweep, Target, CSV_HEADER, SLOPE_CSV_HEADER};
use dirk::integrator::{integrate_observed, perturb_tableau, JacobianReuse, StepperConfig};
use dirk::problems::{problem_by_name, problem_names, OdeProblem};
use dirk::refine::{polish, round_to_significant, RefineSpec};
use dirk::stability::{
    analyze_stability, e_consistency, e_consistency_error, internal_stability_maxima, log_grid,
    modulus_on_imaginary_axis, stability_polynomials, Ray,
};
use dirk::tableau::{
    all_builtins, builtin_alias, builtin_names, load_builtin, parse_tableau, resolve_builtin_name,
    serialize_tableau,
};
use dirk::{HarnessError, RefineError, Tableau};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "dirk", version, about = "High-order DIRK scheme toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Order conditions and linear stability of one scheme.
    Verify {
        /// Builtin name (`DIRK(13,8)A` or `dirk-13-8-a`) or scheme file.
        scheme: String,
        /// Residual tolerance for the order conditions.
        #[arg(long, default_value_t = DEFAULT_ORDER_TOL)]
        tol: f64,
        /// Write per-tree residuals as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Internal stability maxima (`--table 2`) or error measures (`--table 3`) of all builtins.
    Analyze {
        #[arg(long, value_parser = ["2", "3"])]
        table: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Integrates a problem with fixed steps and writes the trajectory.
    Integrate {
        scheme: String,
        #[arg(long)]
        problem: String,
        #[arg(long)]
        dt: f64,
        /// Newton tolerance.
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convergence sweep of one or all schemes on a problem.
    Converge {
        /// Scheme, or `all` for every builtin.
        #[arg(default_value = "all")]
        scheme: String,
        #[arg(long)]
        problem: String,
        /// Step sizes; defaults to 0.1 halved six times.
        #[arg(long, value_delimiter = ',')]
        dt: Vec<f64>,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Error CSV; slopes go to the same path with a `.slopes.csv` suffix.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
        /// Directory for cached reference solutions.
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Plot data for the stability function, E polynomial or e-consistency error.
    StabilityPlot {
        scheme: String,
        #[arg(long, value_enum, default_value_t = PlotKind::R)]
        kind: PlotKind,
        #[arg(long, default_value_t = 2001)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Polishes tableau coefficients onto the order conditions.
    Refine {
        scheme: String,
        /// Round every coefficient to this many significant digits first.
        #[arg(long)]
        digits: Option<u32>,
        /// Add uniform noise of this size to the nonzero coefficients first.
        #[arg(long)]
        perturb: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Convergence tolerance on the residual sup-norm.
        #[arg(long)]
        tol: Option<f64>,
        /// Refined tableau in scheme file format; the log goes next to it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Lists the builtin schemes.
    ListSchemes,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlotKind {
    /// `|R(iy)|` over `y`.
    R,
    /// `E(w)` over `w`.
    E,
    /// `|exp(x) - R(x)|` on the negative real axis.
    EpsReal,
    /// `|exp(iy) - R(iy)|`.
    EpsImag,
}

enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::Numerical(format!("i/o error: {e}"))
    }
}

type Outcome = Result<bool, Failure>;

fn numerical(e: impl std::fmt::Display) -> Failure {
    Failure::Numerical(e.to_string())
}

fn load_scheme(selector: &str) -> Result<Tableau, Failure> {
    if resolve_builtin_name(selector).is_some() {
        return load_builtin(selector).map_err(numerical);
    }
    let path = Path::new(selector);
    if path.is_file() {
        let text = fs::read_to_string(path)?;
        return parse_tableau(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())));
    }
    Err(Failure::Usage(format!(
        "unknown scheme '{selector}' (builtins: {})",
        builtin_names().join(", ")
    )))
}

fn load_problem(name: &str) -> Result<Box<dyn OdeProblem<f64>>, Failure> {
    problem_by_name(name)
        .map_err(|_| Failure::Usage(format!("unknown problem '{name}' (known: {})", problem_names().join(", "))))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => {
            fs::write(p, text)?;
            eprintln!("wrote {}", p.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn with_jobs<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R, Failure> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(Failure::Usage("--jobs must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(numerical)?;
            Ok(pool.install(f))
        }
    }
}

fn verify(scheme: &str, tol: f64, out: Option<&Path>) -> Outcome {
    let t = load_scheme(scheme)?;
    let order = verify_order(&t, tol);
    println!("{order}");
    let stability = analyze_stability(&t).map_err(numerical)?;
    println!("{stability}");
    if let Some(p) = out {
        emit(Some(p), &order.to_csv())?;
    }
    let mut ok = order.achieved_order >= order.declared_order && stability.a_stability.a_stable;
    if t.is_stiffly_accurate() {
        ok &= stability.l_stable;
    }
    println!("verdict           {}", if ok { "pass" } else { "fail" });
    Ok(ok)
}

fn analyze(table: &str, out: Option<&Path>, jobs: Option<usize>) -> Outcome {
    let schemes = all_builtins::<f64>();
    let rows: Vec<Result<String, Failure>> = with_jobs(jobs, || {
        schemes
            .par_iter()
            .map(|t| {
                if table == "2" {
                    let m = internal_stability_maxima(t).map_err(numerical)?;
                    Ok(format!("{},{:.4},{:.4}\n", csv_field(t.name()), m.max_r, m.max_q))
                } else {
                    let r = verify_order(t, DEFAULT_ORDER_TOL);
                    let mut line = csv_field(t.name());
                    for q in [t.order() + 1, t.order() + 2] {
                        match r.e_norm(q) {
                            Some(e) => write!(line, ",{:.3e},{:.3e}", e.l2, e.linf).unwrap(),
                            None => line.push_str(",,"),
                        }
                    }
                    writeln!(line, ",{:.3}", r.d).unwrap();
                    Ok(line)
                }
            })
            .collect()
    })?;
    let mut text = String::from(if table == "2" {
        "scheme,max_abs_r,max_abs_q\n"
    } else {
        "scheme,e2_p1,einf_p1,e2_p2,einf_p2,d\n"
    });
    for row in rows {
        text.push_str(&row?);
    }
    emit(out, &text)?;
    Ok(true)
}

fn integrate_cmd(scheme: &str, problem: &str, dt: f64, tol: f64, out: Option<&Path>) -> Outcome {
    let t = load_scheme(scheme)?;
    let p = load_problem(problem)?;
    let cfg = StepperConfig {
        newton_tol: tol,
        ..StepperConfig::new(dt)
    };
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let (t0, t_end) = p.interval();
    let y0 = p.initial_value();
    let mut text = String::from("t");
    for i in 0..y0.len() {
        write!(text, ",y{i}").unwrap();
    }
    let row = |text: &mut String, time: f64, y: &[f64]| {
        write!(text, "\n{time:e}").unwrap();
        for v in y {
            write!(text, ",{v:e}").unwrap();
        }
    };
    row(&mut text, t0, &y0);
    let (y, trace) = integrate_observed(&t, p.as_ref(), t0, &y0, t_end, &cfg, |time, y| row(&mut text, time, y))
        .map_err(numerical)?;
    text.push('\n');
    emit(out, &text)?;
    eprintln!(
        "{} steps, {} Newton iterations, {} factorizations",
        trace.steps_taken, trace.total_newton_iters, trace.factorizations
    );
    if let Some(exact) = p.exact_solution(t_end) {
        eprintln!("error at t = {t_end}: {:e} ({} norm)", p.error_norm().distance(&y, &exact), p.error_norm().name());
    }
    Ok(true)
}

#[allow(clippy::too_many_arguments)]
fn converge(
    scheme: &str,
    problem: &str,
    dts: &[f64],
    tol: f64,
    out: Option<&Path>,
    jobs: Option<usize>,
    cache: Option<&Path>,
) -> Outcome {
    let schemes = if scheme == "all" {
        all_builtins::<f64>()
    } else {
        vec![load_scheme(scheme)?]
    };
    let p = load_problem(problem)?;
    let dts = if dts.is_empty() { halving(0.1, 6) } else { dts.to_vec() };
    if dts.iter().any(|dt| !(*dt > 0.0)) {
        return Err(Failure::Usage("step sizes must be positive".into()));
    }
    let cfg = StepperConfig {
        newton_tol: tol,
        jacobian_reuse: if tol < 1e-12 { JacobianReuse::EveryIteration } else { JacobianReuse::default() },
        ..StepperConfig::new(dts[0])
    };
    let results = with_jobs(jobs, || -> Result<_, HarnessError> {
        let target = if p.has_exact_solution() {
            Target::Exact
        } else {
            let dt_min = dts.iter().copied().fold(f64::INFINITY, f64::min);
            Target::Reference(dirk::harness::reference_solution(p.as_ref(), &cfg, dt_min, cache)?)
        };
        run_sweep(&schemes, p.as_ref(), &dts, &cfg, &target)
    })?
    .map_err(numerical)?;
    let mut errors = format!("{CSV_HEADER}\n");
    let mut slopes = format!("{SLOPE_CSV_HEADER}\n");
    for r in &results {
        errors.push_str(&r.csv_rows());
        slopes.push_str(&r.slope_row());
        slopes.push('\n');
        for note in &r.notes {
            eprintln!("{}: {note}", r.scheme);
        }
    }
    match out {
        Some(path) => {
            emit(Some(path), &errors)?;
            emit(Some(&path.with_extension("slopes.csv")), &slopes)?;
        }
        None => print!("{errors}\n{slopes}"),
    }
    let failed = results.iter().any(|r| r.points.iter().any(|pt| pt.failure.is_some()));
    Ok(!failed)
}

fn stability_plot(scheme: &str, kind: PlotKind, points: usize, out: Option<&Path>) -> Outcome {
    if points < 2 {
        return Err(Failure::Usage("--points must be at least 2".into()));
    }
    let t = load_scheme(scheme)?;
    let polys = stability_polynomials(&t);
    let mut text = String::new();
    match kind {
        PlotKind::R => {
            text.push_str("y,abs_r\n");
            for (y, r) in modulus_on_imaginary_axis(&polys, 1e-4, 1e6, points) {
                writeln!(text, "{y:e},{r:e}").unwrap();
            }
        }
        PlotKind::E => {
            let e = polys.e_polynomial();
            text.push_str("w,e\n");
            for w in log_grid(1e-4, 1e8, points) {
                let v = e.iter().rev().fold(0.0, |acc, c| acc * w + c);
                writeln!(text, "{w:e},{v:e}").unwrap();
            }
        }
        PlotKind::EpsReal | PlotKind::EpsImag => {
            let defects = e_consistency(&polys, dirk::stability::MAX_TAYLOR_TERMS).map_err(numerical)?;
            let (ray, header) = match kind {
                PlotKind::EpsReal => (Ray::Real, "x,abs_eps\n"),
                _ => (Ray::Imaginary, "y,abs_eps\n"),
            };
            text.push_str(header);
            for x in log_grid(1e-3, 1e1, points) {
                let at = if matches!(ray, Ray::Real) { -x } else { x };
                writeln!(text, "{at:e},{:e}", e_consistency_error(&polys, &defects, ray, at)).unwrap();
            }
        }
    }
    emit(out, &text)?;
    Ok(true)
}

fn refine_cmd(
    scheme: &str,
    digits: Option<u32>,
    perturb: Option<f64>,
    seed: u64,
    tol: Option<f64>,
    out: Option<&Path>,
) -> Outcome {
    let mut t = load_scheme(scheme)?;
    if let Some(d) = digits {
        if d == 0 || d > 17 {
            return Err(Failure::Usage("--digits must be in 1..=17".into()));
        }
        t = round_to_significant(&t, d as usize);
    }
    if let Some(eps) = perturb {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        t = perturb_tableau(&t, eps, &mut rng);
    }
    let mut spec = RefineSpec::for_tableau(&t);
    if let Some(tol) = tol {
        spec.convergence_tol = tol;
    }
    let mut outcome = match polish(&t, &spec) {
        Ok(o) => o,
        Err(RefineError::Spec(m)) => return Err(Failure::Usage(m)),
        Err(e) => return Err(numerical(e)),
    };
    let guard = outcome.verify().clone();
    println!("initial residual  {:e}", outcome.initial_residual);
    println!("final residual    {:e}", outcome.final_residual);
    println!("iterations        {}", outcome.iterations);
    println!("converged         {}", outcome.converged);
    match &guard.verdict {
        Ok(v) => println!("A-stable          {} (margin {:.3e})", v.a_stable, v.margin()),
        Err(e) => println!("A-stable          unknown ({e})"),
    }
    let mut name = outcome.tableau.name().to_string();
    if !name.ends_with("(refined)") {
        name.push_str(" (refined)");
    }
    outcome.tableau.set_name(name);
    let tableau_text = serialize_tableau(&outcome.tableau);
    match out {
        Some(path) => {
            emit(Some(path), &tableau_text)?;
            emit(Some(&path.with_extension("log.csv")), &outcome.log_csv())?;
        }
        None => print!("{tableau_text}"),
    }
    Ok(outcome.converged && guard.passed())
}

fn list_schemes() -> Outcome {
    println!("{:<14} {:<13} {:>3} {:>3}  flags", "name", "alias", "s", "p");
    for t in all_builtins::<f64>() {
        let mut flags = vec!["dirk"];
        if t.is_stiffly_accurate() {
            flags.push("stiffly-accurate");
        }
        println!(
            "{:<14} {:<13} {:>3} {:>3}  {}",
            t.name(),
            builtin_alias(t.name()).unwrap_or(""),
            t.stages(),
            t.order(),
            flags.join(",")
        );
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Verify { scheme, tol, out } => verify(scheme, *tol, out.as_deref()),
        Command::Analyze { table, out, jobs } => analyze(table, out.as_deref(), *jobs),
        Command::Integrate { scheme, problem, dt, tol, out } => {
            integrate_cmd(scheme, problem, *dt, *tol, out.as_deref())
        }
        Command::Converge { scheme, problem, dt, tol, out, jobs, cache } => {
            converge(scheme, problem, dt, *tol, out.as_deref(), *jobs, cache.as_deref())
        }
        Command::StabilityPlot { scheme, kind, points, out } => {
            stability_plot(scheme, *kind, *points, out.as_deref())
        }
        Command::Refine { scheme, digits, perturb, seed, tol, out } => {
            refine_cmd(scheme, *digits, *perturb, *seed, *tol, out.as_deref())
        }
        Command::ListSchemes => list_schemes(),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Numerical(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
