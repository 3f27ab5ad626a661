//! Linear stability analysis: the stability function `R = P/Q`, A-stability via
//! the E-polynomial, L-stability, internal stability and e-consistency.

use std::fmt;

use num_complex::Complex;

use crate::error::StabilityError;
use crate::poly;
use crate::scalar::{dot2, DoubleDouble, Scalar};
use crate::tableau::ButcherTableau;

/// Limit on `|R(inf)|` for the L-stability verdict.
pub const L_STABILITY_TOL: f64 = 1e-12;
/// Relative size of `tau_E` with respect to `max |E_k|`.
pub const E_TOLERANCE_FACTOR: f64 = 1e-9;
/// Taylor defects below this count as matched in the e-consistency order.
pub const E_CONSISTENCY_TOL: f64 = 1e-13;
/// Largest number of Taylor terms accepted by [`e_consistency`].
pub const MAX_TAYLOR_TERMS: usize = 25;

const W_SCAN_MIN: f64 = 1e-8;
const W_SCAN_MAX: f64 = 1e16;
const W_SCAN_PER_DECADE: usize = 100;
const DEGENERACY_TOL: f64 = 1e-10;
const INTERNAL_Y_MIN: f64 = 1e-6;
const INTERNAL_Y_MAX: f64 = 1e8;
const INTERNAL_PER_DECADE: usize = 2000;

fn c<T: Scalar>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

/// Numerator and denominator of `R(z)`, ascending coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilityPolynomials<T> {
    pub p: Vec<T>,
    pub q: Vec<T>,
}

impl<T: Scalar> StabilityPolynomials<T> {
    pub fn eval(&self, z: Complex<T>) -> Complex<T> {
        poly::eval_complex(&self.p, z) / poly::eval_complex(&self.q, z)
    }

    pub fn degree_p(&self) -> Option<usize> {
        poly::degree(&self.p)
    }

    pub fn degree_q(&self) -> Option<usize> {
        poly::degree(&self.q)
    }

    /// Coefficients of `E(w) = |Q(iy)|^2 - |P(iy)|^2` as a polynomial in `w = y^2`.
    ///
    /// Coefficients below the rounding bound of their own evaluation are zeroed.
    pub fn e_polynomial(&self) -> Vec<T> {
        let (mut e, bounds) = e_coefficients(&self.p, &self.q);
        snap(&mut e, &bounds, 8 * self.q.len() * self.q.len());
        e
    }
}

/// Product of `(1 - z d_k)` over `ds`.
fn linear_product<T: Scalar>(ds: &[T]) -> Vec<T> {
    ds.iter()
        .fold(vec![T::one()], |acc, &d| poly::mul(&acc, &[T::one(), -d]))
}

/// Builds `P` for a lower-triangular `A` through the stage recursion
/// `R_i = (1 + z sum_{j<i} a_ij R_j) / (1 - z a_ii)`, carrying numerators
/// `N_i = R_i prod_{k<=i}(1 - z a_kk)` as polynomials.
fn dirk_numerator<T: Scalar>(a: impl Fn(usize, usize) -> T, b: &[T]) -> Vec<T> {
    let s = b.len();
    let diag: Vec<T> = (0..s).map(|i| a(i, i)).collect();
    let mut numerators: Vec<Vec<T>> = Vec::with_capacity(s);
    for i in 0..s {
        let mut n_i = linear_product(&diag[..i]);
        for j in 0..i {
            let aij = a(i, j);
            if aij.is_zero() {
                continue;
            }
            let term = poly::mul(&numerators[j], &linear_product(&diag[j + 1..i]));
            poly::axpy_shifted(&mut n_i, aij, 1, &term);
        }
        numerators.push(n_i);
    }
    let mut p = linear_product(&diag);
    for (i, n_i) in numerators.iter().enumerate() {
        if b[i].is_zero() {
            continue;
        }
        let term = poly::mul(n_i, &linear_product(&diag[i + 1..]));
        poly::axpy_shifted(&mut p, b[i], 1, &term);
    }
    p.resize(s + 1, T::zero());
    p
}

/// `det(I - z M)` through the Faddeev–LeVerrier recursion on `M`.
fn det_polynomial<T: Scalar>(m: &[T], s: usize) -> Vec<T> {
    // characteristic polynomial lambda^s + c_1 lambda^{s-1} + ... + c_s, and
    // det(I - zM) = 1 + c_1 z + ... + c_s z^s
    let mut coeffs = vec![T::one()];
    let mut mk = vec![T::zero(); s * s];
    for k in 1..=s {
        // M_k = M (M_{k-1} + c_{k-1} I)
        let prev = mk.clone();
        let mut shifted = prev;
        for i in 0..s {
            shifted[i * s + i] += coeffs[k - 1];
        }
        for i in 0..s {
            for j in 0..s {
                let row = &m[i * s..(i + 1) * s];
                let col: Vec<T> = (0..s).map(|l| shifted[l * s + j]).collect();
                mk[i * s + j] = dot2(row, &col);
            }
        }
        let trace = (0..s).map(|i| mk[i * s + i]).sum::<T>();
        coeffs.push(-trace / T::from_usize(k).unwrap());
    }
    coeffs
}

/// Zeroes coefficients that are indistinguishable from rounding noise given an
/// a-priori magnitude bound for each one.
fn snap<T: Scalar>(coeffs: &mut [T], bounds: &[T], ops: usize) {
    let factor = T::epsilon() * T::from_usize(ops.max(1)).unwrap();
    for (c, &b) in coeffs.iter_mut().zip(bounds) {
        if c.abs() <= factor * b {
            *c = T::zero();
        }
    }
}

/// Computes `P` and `Q` with `R(z) = P(z)/Q(z)`.
///
/// For DIRK tableaus `Q = prod (1 - z a_ii)` exactly and `P` comes from the
/// stage recursion; otherwise both determinants are expanded with
/// Faddeev–LeVerrier. Coefficients of `P` that fall below the rounding bound of
/// their own computation are snapped to zero, so stiffly accurate schemes end
/// up with `deg P < deg Q`.
pub fn stability_polynomials<T: Scalar>(t: &ButcherTableau<T>) -> StabilityPolynomials<T> {
    let s = t.stages();
    if t.is_dirk() {
        let diag: Vec<T> = (0..s).map(|i| t.a(i, i)).collect();
        let q = linear_product(&diag);
        let mut p = dirk_numerator(|i, j| t.a(i, j), t.b());
        let abs_b: Vec<T> = t.b().iter().map(|x| x.abs()).collect();
        let bound = dirk_numerator(
            |i, j| if i == j { -t.a(i, i).abs() } else { t.a(i, j).abs() },
            &abs_b,
        );
        snap(&mut p, &bound, 8 * s * s);
        StabilityPolynomials { p, q }
    } else {
        let q = det_polynomial(t.a_flat(), s);
        let mut m = t.a_flat().to_vec();
        for i in 0..s {
            for j in 0..s {
                m[i * s + j] -= t.b()[j];
            }
        }
        let mut p = det_polynomial(&m, s);
        let abs_m: Vec<T> = m.iter().map(|x| x.abs()).collect();
        let bound: Vec<T> = det_polynomial(&abs_m, s).iter().map(|x| x.abs()).collect();
        // Faddeev–LeVerrier loses accuracy geometrically; be generous.
        snap(&mut p, &bound, 64 * s * s * s);
        StabilityPolynomials { p, q }
    }
}

/// `E` coefficients in `w` and their a-priori magnitude bounds.
fn e_coefficients<T: Scalar>(p: &[T], q: &[T]) -> (Vec<T>, Vec<T>) {
    let deg = p.len().max(q.len());
    let get = |v: &[T], k: usize| v.get(k).copied().unwrap_or_else(T::zero);
    let n_max = deg.saturating_sub(1);
    let mut e = Vec::with_capacity(n_max + 1);
    let mut bounds = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut bound = T::zero();
        for j in 0..=(2 * n) {
            let k = 2 * n - j;
            let sign = if (n + k) % 2 == 0 { T::one() } else { -T::one() };
            let (qj, qk, pj, pk) = (get(q, j), get(q, k), get(p, j), get(p, k));
            xs.push(sign * qj);
            ys.push(qk);
            xs.push(-sign * pj);
            ys.push(pk);
            bound += (qj * qk).abs() + (pj * pk).abs();
        }
        e.push(dot2(&xs, &ys));
        bounds.push(bound);
    }
    (e, bounds)
}

/// Outcome of the E-polynomial A-stability test, with the evidence behind it.
#[derive(Clone, Debug, PartialEq)]
pub struct AStabilityVerdict {
    pub a_stable: bool,
    /// `tau_E = 1e-9 * max |E_k|`.
    pub tau: f64,
    /// Smallest value of `E(w)` found on the scan grid and at root neighbourhoods.
    pub min_e: f64,
    pub min_e_at: f64,
    /// Smallest `E` in a relative `1e-6` neighbourhood of any positive real root.
    pub worst_root_defect: Option<f64>,
    /// Positive real roots of `E(w)`, ascending.
    pub positive_roots: Vec<f64>,
    /// Sign of `E` as `w -> inf` (zero for `E == 0`).
    pub asymptotic_sign: i8,
}

impl AStabilityVerdict {
    /// `min E / tau`: negative values beyond -1 reject A-stability.
    pub fn margin(&self) -> f64 {
        let worst = self.worst_root_defect.map_or(self.min_e, |d| d.min(self.min_e));
        if self.tau > 0.0 {
            worst / self.tau
        } else {
            worst
        }
    }
}

/// Decides A-stability from `E(w) >= -tau_E` on `w >= 0`.
///
/// The check combines (a) the positive real roots of `E(w)` from the companion
/// matrix, probing each neighbourhood for a sign change, (b) a log-spaced scan
/// over `w` in `[1e-8, 1e16]`, and (c) the sign of the leading coefficient for
/// `w -> inf`.
pub fn a_stability_check<T: Scalar>(
    polys: &StabilityPolynomials<T>,
) -> Result<AStabilityVerdict, StabilityError> {
    check_nondegenerate(polys)?;
    let e = polys.e_polynomial();
    let e64: Vec<f64> = e.iter().map(|x| x.as_f64()).collect();
    Ok(decide_a_stability(&e64))
}

fn decide_a_stability(e: &[f64]) -> AStabilityVerdict {
    let max_coeff = e.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let tau = E_TOLERANCE_FACTOR * max_coeff;
    let eval = |w: f64| poly::eval(e, w);

    let Some(top) = e.iter().rposition(|x| *x != 0.0) else {
        return AStabilityVerdict {
            a_stable: true,
            tau,
            min_e: 0.0,
            min_e_at: 0.0,
            worst_root_defect: None,
            positive_roots: Vec::new(),
            asymptotic_sign: 0,
        };
    };
    let asymptotic_sign = if e[top] > 0.0 { 1 } else { -1 };

    let mut positive_roots: Vec<f64> = poly::roots(e)
        .into_iter()
        .filter(|r| r.re > 0.0 && r.im.abs() <= 1e-6 * r.re.abs())
        .map(|r| r.re)
        .collect();
    positive_roots.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut min_e = f64::INFINITY;
    let mut min_e_at = 0.0;
    let decades = (W_SCAN_MAX / W_SCAN_MIN).log10();
    let n = (decades * W_SCAN_PER_DECADE as f64).round() as usize;
    for k in 0..=n {
        let w = W_SCAN_MIN * 10f64.powf(k as f64 / W_SCAN_PER_DECADE as f64);
        let v = eval(w);
        if v < min_e {
            min_e = v;
            min_e_at = w;
        }
    }
    let mut worst_root_defect: Option<f64> = None;
    for &r in &positive_roots {
        for f in [1.0 - 1e-6, 1.0, 1.0 + 1e-6] {
            let v = eval(r * f);
            worst_root_defect = Some(worst_root_defect.map_or(v, |d: f64| d.min(v)));
            if v < min_e {
                min_e = v;
                min_e_at = r * f;
            }
        }
    }
    let a_stable = asymptotic_sign > 0
        && min_e >= -tau
        && worst_root_defect.is_none_or(|d| d >= -tau);
    AStabilityVerdict {
        a_stable,
        tau,
        min_e,
        min_e_at,
        worst_root_defect,
        positive_roots,
        asymptotic_sign,
    }
}

/// Rejects `P/Q` pairs with a common root (within `1e-10`, relative for roots
/// away from the origin).
fn check_nondegenerate<T: Scalar>(polys: &StabilityPolynomials<T>) -> Result<(), StabilityError> {
    let q64: Vec<f64> = polys.q.iter().map(|x| x.as_f64()).collect();
    let p64: Vec<f64> = polys.p.iter().map(|x| x.as_f64()).collect();
    let p_roots = poly::roots(&p64);
    for r in poly::roots(&q64) {
        let tol = DEGENERACY_TOL * r.norm().max(1.0);
        if p_roots.iter().any(|pr| (pr - r).norm() <= tol) {
            return Err(StabilityError::Degenerate { root: r.re });
        }
    }
    Ok(())
}

/// `R(z) = 1 + z b^T (I - zA)^{-1} e` by a direct linear solve.
pub fn stability_function<T: Scalar>(t: &ButcherTableau<T>, z: Complex<T>) -> Complex<T> {
    let stages = stage_solve(t, z, &vec![c(T::one(), T::zero()); t.stages()]);
    let sum = t
        .b()
        .iter()
        .zip(&stages)
        .fold(c(T::zero(), T::zero()), |acc, (&b, u)| acc + u * b);
    c(T::one(), T::zero()) + z * sum
}

/// Solves `(I - zA) x = rhs` (forward substitution when `A` is lower triangular,
/// Gaussian elimination with partial pivoting otherwise).
pub fn stage_solve<T: Scalar>(
    t: &ButcherTableau<T>,
    z: Complex<T>,
    rhs: &[Complex<T>],
) -> Vec<Complex<T>> {
    let s = t.stages();
    let one = c(T::one(), T::zero());
    if t.is_dirk() {
        let mut x: Vec<Complex<T>> = Vec::with_capacity(s);
        for i in 0..s {
            let mut acc = rhs[i];
            for j in 0..i {
                acc += z * x[j] * t.a(i, j);
            }
            x.push(acc / (one - z * t.a(i, i)));
        }
        return x;
    }
    let mut m: Vec<Complex<T>> = (0..s * s)
        .map(|k| {
            let (i, j) = (k / s, k % s);
            let id = if i == j { one } else { c(T::zero(), T::zero()) };
            id - z * t.a(i, j)
        })
        .collect();
    let mut x = rhs.to_vec();
    complex_gauss_solve(&mut m, &mut x, s);
    x
}

/// Solves `(I - zA)^T x = rhs`.
fn stage_solve_transposed<T: Scalar>(
    t: &ButcherTableau<T>,
    z: Complex<T>,
    rhs: &[Complex<T>],
) -> Vec<Complex<T>> {
    let s = t.stages();
    let one = c(T::one(), T::zero());
    let mut x = vec![c(T::zero(), T::zero()); s];
    for i in (0..s).rev() {
        let mut acc = rhs[i];
        for j in i + 1..s {
            acc += z * x[j] * t.a(j, i);
        }
        x[i] = acc / (one - z * t.a(i, i));
    }
    x
}

fn complex_gauss_solve<T: Scalar>(m: &mut [Complex<T>], x: &mut [Complex<T>], n: usize) {
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&a, &b| {
                m[a * n + col]
                    .norm()
                    .partial_cmp(&m[b * n + col].norm())
                    .unwrap()
            })
            .unwrap();
        if piv != col {
            for k in 0..n {
                m.swap(col * n + k, piv * n + k);
            }
            x.swap(col, piv);
        }
        let d = m[col * n + col];
        for r in col + 1..n {
            let f = m[r * n + col] / d;
            for k in col..n {
                let v = m[col * n + k];
                m[r * n + k] -= f * v;
            }
            let v = x[col];
            x[r] -= f * v;
        }
    }
    for r in (0..n).rev() {
        let mut acc = x[r];
        for k in r + 1..n {
            acc -= m[r * n + k] * x[k];
        }
        x[r] = acc / m[r * n + r];
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LStability {
    pub r_infinity: f64,
    pub l_stable: bool,
}

/// `R(inf)`: `1 - b^T A^{-1} e` for invertible `A` (computed as `1 - e^T A^{-T} b`
/// by back substitution, which is exact for stiffly accurate rows), otherwise
/// from the leading coefficients of `P` and `Q`.
pub fn r_at_infinity<T: Scalar>(t: &ButcherTableau<T>, polys: &StabilityPolynomials<T>) -> f64 {
    let s = t.stages();
    let invertible_diag = t.is_dirk() && (0..s).all(|i| !t.a(i, i).is_zero());
    if invertible_diag {
        let mut y = vec![T::zero(); s];
        for i in (0..s).rev() {
            let mut acc = t.b()[i];
            for j in i + 1..s {
                acc -= t.a(j, i) * y[j];
            }
            y[i] = acc / t.a(i, i);
        }
        return (T::one() - crate::scalar::sum2(y)).as_f64();
    }
    match (polys.degree_p(), polys.degree_q()) {
        (None, _) => 0.0,
        (Some(dp), Some(dq)) if dp < dq => 0.0,
        (Some(dp), Some(dq)) if dp == dq => (polys.p[dp] / polys.q[dq]).as_f64(),
        _ => f64::INFINITY,
    }
}

/// L-stable iff A-stable and `|R(inf)| <= 1e-12`.
pub fn l_stability_check<T: Scalar>(
    t: &ButcherTableau<T>,
    polys: &StabilityPolynomials<T>,
    a_stable: bool,
) -> LStability {
    let r_infinity = r_at_infinity(t, polys);
    LStability {
        r_infinity,
        l_stable: a_stable && r_infinity.abs() <= L_STABILITY_TOL,
    }
}

/// Maxima over stages `j` and `y` of `|R_j(iy)|` and `|Q_j(iy)|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InternalStability {
    pub max_r: f64,
    pub max_r_stage: usize,
    pub max_r_at: f64,
    pub max_q: f64,
    pub max_q_stage: usize,
    pub max_q_at: f64,
}

fn internal_values<T: Scalar>(t: &ButcherTableau<T>, y: f64) -> (Vec<f64>, Vec<f64>) {
    let s = t.stages();
    let z = c(T::zero(), T::lit(y));
    let ones = vec![c(T::one(), T::zero()); s];
    let r: Vec<f64> = stage_solve(t, z, &ones).iter().map(|v| v.norm().as_f64()).collect();
    let bvec: Vec<Complex<T>> = t.b().iter().map(|&b| c(b, T::zero())).collect();
    let q: Vec<f64> = stage_solve_transposed(t, z, &bvec)
        .iter()
        .map(|v| v.norm().as_f64())
        .collect();
    (r, q)
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while (hi - lo) > 1e-6 * hi.abs().max(1e-300) {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Internal stability maxima along the imaginary axis.
///
/// `R_j(z) = [(I - zA)^{-1} e]_j` and `Q_j(z) = [b^T (I - zA)^{-1}]_j` are
/// sampled at `y = 0` and on a log grid over `[1e-6, 1e8]` (2000 points per
/// decade), then refined by golden-section search around the best sample of
/// each stage. Only `y >= 0` is needed since `|F(-iy)| = |F(iy)|` for real
/// coefficients.
pub fn internal_stability_maxima<T: Scalar>(
    t: &ButcherTableau<T>,
) -> Result<InternalStability, StabilityError> {
    let s = t.stages();
    if !t.is_dirk() {
        return Err(StabilityError::Unsupported(
            "internal stability scan requires a DIRK tableau".into(),
        ));
    }
    if let Some(i) = (0..s).find(|&i| t.a(i, i).is_zero()) {
        return Err(StabilityError::Unsupported(format!(
            "diagonal entry a[{}][{}] is zero, so R_j and Q_j need not decay at infinity",
            i + 1,
            i + 1
        )));
    }
    let decades = (INTERNAL_Y_MAX / INTERNAL_Y_MIN).log10();
    let n = (decades * INTERNAL_PER_DECADE as f64).round() as usize;
    let grid: Vec<f64> = std::iter::once(0.0)
        .chain((0..=n).map(|k| {
            INTERNAL_Y_MIN * 10f64.powf(k as f64 / INTERNAL_PER_DECADE as f64)
        }))
        .collect();
    // per-stage best grid index for R and Q
    let mut best_r = vec![(0usize, f64::NEG_INFINITY); s];
    let mut best_q = vec![(0usize, f64::NEG_INFINITY); s];
    for (k, &y) in grid.iter().enumerate() {
        let (r, q) = internal_values(t, y);
        for j in 0..s {
            if r[j] > best_r[j].1 {
                best_r[j] = (k, r[j]);
            }
            if q[j] > best_q[j].1 {
                best_q[j] = (k, q[j]);
            }
        }
    }
    let refine = |best: &[(usize, f64)], pick_q: bool| -> (usize, f64, f64) {
        let mut out = (0, f64::NEG_INFINITY, 0.0);
        for (j, &(k, v)) in best.iter().enumerate() {
            let (mut y_best, mut v_best) = (grid[k], v);
            if k > 0 && k + 1 < grid.len() {
                let f = |y: f64| {
                    let (r, q) = internal_values(t, y);
                    if pick_q {
                        q[j]
                    } else {
                        r[j]
                    }
                };
                let (y, val) = golden_max(f, grid[k - 1], grid[k + 1]);
                if val > v_best {
                    y_best = y;
                    v_best = val;
                }
            }
            if v_best > out.1 {
                out = (j, v_best, y_best);
            }
        }
        out
    };
    let (rj, rv, ry) = refine(&best_r, false);
    let (qj, qv, qy) = refine(&best_q, true);
    Ok(InternalStability {
        max_r: rv,
        max_r_stage: rj + 1,
        max_r_at: ry,
        max_q: qv,
        max_q_stage: qj + 1,
        max_q_at: qy,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EConsistency {
    /// `1/k! - r_k` for `k = 0..n_terms`, where `r_k` are the Taylor coefficients of `R`.
    pub taylor_defect: Vec<f64>,
    /// Largest `q` with `|defect_k| <= 1e-13` for all `k <= q`.
    pub order: usize,
}

/// Taylor coefficients of `R = P/Q` by power-series division in double-double.
pub fn taylor_coefficients<T: Scalar>(polys: &StabilityPolynomials<T>, n_terms: usize) -> Vec<DoubleDouble<T>> {
    let get = |v: &[T], k: usize| DoubleDouble::new(v.get(k).copied().unwrap_or_else(T::zero));
    let q0 = get(&polys.q, 0);
    let mut r: Vec<DoubleDouble<T>> = Vec::with_capacity(n_terms);
    for k in 0..n_terms {
        let mut acc = get(&polys.p, k);
        for j in 1..=k.min(polys.q.len().saturating_sub(1)) {
            acc = acc - get(&polys.q, j) * r[k - j];
        }
        r.push(acc / q0);
    }
    r
}

/// Taylor defects of `exp(z) - R(z)` and the e-consistency order.
pub fn e_consistency<T: Scalar>(
    polys: &StabilityPolynomials<T>,
    n_terms: usize,
) -> Result<EConsistency, StabilityError> {
    if n_terms == 0 || n_terms > MAX_TAYLOR_TERMS {
        return Err(StabilityError::Unsupported(format!(
            "n_terms must be in 1..={MAX_TAYLOR_TERMS}"
        )));
    }
    let r = taylor_coefficients(polys, n_terms);
    let mut inv_fact = DoubleDouble::<T>::one();
    let mut taylor_defect = Vec::with_capacity(n_terms);
    for (k, rk) in r.iter().enumerate() {
        if k > 0 {
            inv_fact = inv_fact / DoubleDouble::new(T::from_usize(k).unwrap());
        }
        taylor_defect.push((inv_fact - *rk).to_scalar().as_f64());
    }
    let order = taylor_defect
        .iter()
        .position(|d| d.abs() > E_CONSISTENCY_TOL)
        .map_or(n_terms - 1, |k| k.saturating_sub(1));
    Ok(EConsistency {
        taylor_defect,
        order,
    })
}

/// Direction along which `epsilon(z) = exp(z) - R(z)` is sampled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ray {
    /// `z = x`, real.
    Real,
    /// `z = i y`.
    Imaginary,
}

/// `|exp(z) - R(z)|` at `z = x` (real ray) or `z = i x` (imaginary ray).
///
/// Close to the origin the difference is summed from the Taylor defects to
/// avoid cancellation; elsewhere it is evaluated directly.
pub fn e_consistency_error<T: Scalar>(
    polys: &StabilityPolynomials<T>,
    defects: &EConsistency,
    ray: Ray,
    x: f64,
) -> f64 {
    let z = match ray {
        Ray::Real => Complex::new(x, 0.0),
        Ray::Imaginary => Complex::new(0.0, x),
    };
    if z.norm() <= 0.05 {
        let mut acc = Complex::new(0.0, 0.0);
        let mut zk = Complex::new(1.0, 0.0);
        for d in &defects.taylor_defect {
            acc += zk * *d;
            zk *= z;
        }
        return acc.norm();
    }
    let zt = Complex::new(T::lit(z.re), T::lit(z.im));
    let r = polys.eval(zt);
    let r = Complex::new(r.re.as_f64(), r.im.as_f64());
    (z.exp() - r).norm()
}

/// Everything the stability module reports about a scheme.
#[derive(Clone, Debug)]
pub struct StabilityReport<T> {
    pub scheme: String,
    pub polynomials: StabilityPolynomials<T>,
    pub e_coeffs: Vec<T>,
    pub a_stability: AStabilityVerdict,
    pub r_infinity: f64,
    pub l_stable: bool,
    pub stiffly_accurate: bool,
    pub e_consistency_order: usize,
    pub internal: Option<InternalStability>,
}

impl<T: Scalar> StabilityReport<T> {
    pub fn internal_max_r(&self) -> Option<f64> {
        self.internal.map(|i| i.max_r)
    }

    pub fn internal_max_q(&self) -> Option<f64> {
        self.internal.map(|i| i.max_q)
    }
}

impl<T: Scalar> fmt::Display for StabilityReport<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = &self.a_stability;
        writeln!(f, "scheme            {}", self.scheme)?;
        writeln!(
            f,
            "deg P / deg Q     {} / {}",
            self.polynomials.degree_p().map_or(-1, |d| d as i64),
            self.polynomials.degree_q().map_or(-1, |d| d as i64)
        )?;
        writeln!(
            f,
            "A-stable          {} (min E = {:.3e} at w = {:.3e}, tau_E = {:.3e}, {} positive roots)",
            v.a_stable,
            v.min_e,
            v.min_e_at,
            v.tau,
            v.positive_roots.len()
        )?;
        writeln!(f, "R(inf)            {:.6e}", self.r_infinity)?;
        writeln!(f, "L-stable          {}", self.l_stable)?;
        writeln!(f, "stiffly accurate  {}", self.stiffly_accurate)?;
        write!(f, "e-consistency     {}", self.e_consistency_order)?;
        if let Some(i) = self.internal {
            write!(
                f,
                "\nmax |R_j(iy)|     {:.4} (stage {}, y = {:.4e})\nmax |Q_j(iy)|     {:.4} (stage {}, y = {:.4e})",
                i.max_r, i.max_r_stage, i.max_r_at, i.max_q, i.max_q_stage, i.max_q_at
            )?;
        }
        Ok(())
    }
}

/// Runs the full stability analysis. The internal-stability scan is skipped
/// (left `None`) for tableaus it does not support.
pub fn analyze_stability<T: Scalar>(
    t: &ButcherTableau<T>,
) -> Result<StabilityReport<T>, StabilityError> {
    let polynomials = stability_polynomials(t);
    let a_stability = a_stability_check(&polynomials)?;
    let l = l_stability_check(t, &polynomials, a_stability.a_stable);
    let e_consistency_order = e_consistency(&polynomials, MAX_TAYLOR_TERMS)?.order;
    let internal = internal_stability_maxima(t).ok();
    Ok(StabilityReport {
        scheme: t.name().to_string(),
        e_coeffs: polynomials.e_polynomial(),
        polynomials,
        a_stability,
        r_infinity: l.r_infinity,
        l_stable: l.l_stable,
        stiffly_accurate: t.is_stiffly_accurate(),
        e_consistency_order,
        internal,
    })
}

/// CSV rows `y,abs_r` of `|R(iy)|` on a log grid.
pub fn modulus_on_imaginary_axis<T: Scalar>(
    polys: &StabilityPolynomials<T>,
    y_min: f64,
    y_max: f64,
    points: usize,
) -> Vec<(f64, f64)> {
    log_grid(y_min, y_max, points)
        .map(|y| (y, polys.eval(c(T::zero(), T::lit(y))).norm().as_f64()))
        .collect()
}

pub fn log_grid(lo: f64, hi: f64, points: usize) -> impl Iterator<Item = f64> {
    let n = points.max(2) - 1;
    let (llo, lhi) = (lo.log10(), hi.log10());
    (0..=n).map(move |k| 10f64.powf(llo + (lhi - llo) * k as f64 / n as f64))
}
