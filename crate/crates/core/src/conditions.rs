//! Elementary weights, order-condition residuals and the leading error measures.
//!
//! For a tree `t` of order `q` the residual is
//! `tau(t) = (b^T Phi(t) - 1/gamma(t)) / sigma(t)`, with `Phi(leaf) = e` and
//! `Phi(t) = prod_children (A Phi(child))` componentwise.

use std::collections::BTreeMap;
use std::fmt;

use crate::scalar::{dot2, sum2, Scalar};
use crate::tableau::{ButcherTableau, Coefficient};
use crate::trees::{enumerate_trees, RootedTree, MAX_TREE_ORDER};

/// Default tolerance on order-condition residuals for 16-digit coefficients.
pub const DEFAULT_ORDER_TOL: f64 = 5e-13;

/// Largest stage order probed by [`stage_order`].
const MAX_STAGE_ORDER: usize = 10;

fn weights_with<T: Clone + Coefficient>(
    t: &ButcherTableau<T>,
    tree: &RootedTree,
    dot: &impl Fn(&[T], &[T]) -> T,
) -> Vec<T> {
    let s = t.stages();
    let mut phi = vec![T::one(); s];
    for child in tree.children() {
        let inner = weights_with(t, child, dot);
        for (i, p) in phi.iter_mut().enumerate() {
            *p = p.clone() * dot(t.row(i), &inner);
        }
    }
    phi
}

fn plain_dot<T: Coefficient>(x: &[T], y: &[T]) -> T {
    x.iter()
        .zip(y)
        .fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
}

/// Elementary weight vector `Phi(tree)` in the tableau's own arithmetic
/// (exact for rational coefficients).
pub fn elementary_weights<T: Coefficient>(t: &ButcherTableau<T>, tree: &RootedTree) -> Vec<T> {
    weights_with(t, tree, &plain_dot)
}

/// Order-condition residual in exact arithmetic; intended for rational tableaus.
pub fn residual_exact<T: Coefficient>(t: &ButcherTableau<T>, tree: &RootedTree) -> T {
    let phi = elementary_weights(t, tree);
    let gamma = T::from_u64(tree.density()).expect("density representable");
    let sigma = T::from_u64(tree.symmetry()).expect("symmetry representable");
    (plain_dot(t.b(), &phi) - T::one() / gamma) / sigma
}

/// Weighted and unweighted residual of one tree, using compensated dot products.
fn residual_pair<T: Scalar>(t: &ButcherTableau<T>, tree: &RootedTree) -> (T, T) {
    let phi = weights_with(t, tree, &|x: &[T], y: &[T]| dot2(x, y));
    let gamma = T::from_u64(tree.density()).expect("density representable");
    let sigma = T::from_u64(tree.symmetry()).expect("symmetry representable");
    // b^T Phi - 1/gamma with the subtraction folded into the compensated sum
    let mut terms = phi;
    for (p, b) in terms.iter_mut().zip(t.b()) {
        *p = *p * *b;
    }
    terms.push(-(T::one() / gamma));
    let raw = sum2(terms);
    (raw / sigma, raw)
}

/// `tau(t) = (b^T Phi(t) - 1/gamma(t)) / sigma(t)`.
pub fn residual<T: Scalar>(t: &ButcherTableau<T>, tree: &RootedTree) -> T {
    residual_pair(t, tree).0
}

/// Residuals of every tree of order `q`, in canonical tree order.
pub fn residuals_of_order<T: Scalar>(t: &ButcherTableau<T>, q: usize) -> Vec<T> {
    enumerate_trees(q)
        .expect("order within range")
        .iter()
        .map(|tree| residual(t, tree))
        .collect()
}

/// Stacked residual vector over all trees of order `1..=p`.
pub fn stacked_residuals<T: Scalar>(t: &ButcherTableau<T>, p: usize) -> Vec<T> {
    (1..=p).flat_map(|q| residuals_of_order(t, q)).collect()
}

/// Euclidean norm accumulated in canonical order with compensation.
pub fn l2_norm<T: Scalar>(v: &[T]) -> T {
    sum2(v.iter().map(|x| *x * *x)).sqrt()
}

pub fn linf_norm<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// Largest `r` with `A c^{k-1} = c^k / k` componentwise for all `k <= r`,
/// each row compared relative to the magnitude of its terms.
pub fn stage_order<T: Scalar>(t: &ButcherTableau<T>, tol: T) -> usize {
    let s = t.stages();
    let c = t.c();
    let mut r = 0;
    for k in 1..=MAX_STAGE_ORDER {
        let kk = T::from_usize(k).unwrap();
        let ck1: Vec<T> = c.iter().map(|&ci| ci.powi(k as i32 - 1)).collect();
        let ok = (0..s).all(|i| {
            let lhs = dot2(t.row(i), &ck1);
            let rhs = c[i].powi(k as i32) / kk;
            let size = t
                .row(i)
                .iter()
                .zip(&ck1)
                .fold(rhs.abs(), |m, (a, x)| m + (*a * *x).abs());
            (lhs - rhs).abs() <= tol * size.max(T::epsilon())
        });
        if !ok {
            break;
        }
        r = k;
    }
    r
}

/// L2 and L-infinity norms of the residual vector at one order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorNorms<T> {
    pub order: usize,
    pub l2: T,
    pub linf: T,
}

#[derive(Clone, Debug)]
pub struct OrderReport<T> {
    pub scheme: String,
    pub declared_order: usize,
    pub achieved_order: usize,
    pub stage_order: usize,
    /// Residuals per order `q`, with the `1/sigma` weighting.
    pub residuals: BTreeMap<usize, Vec<T>>,
    /// `E^(p+1)` and, when `p + 2 <= 10`, `E^(p+2)`.
    pub e_norms: Vec<ErrorNorms<T>>,
    /// Same norms without the `1/sigma` factor.
    pub e_norms_unweighted: Vec<ErrorNorms<T>>,
    /// `max{|a_ij|, |b_i|, |c_i|}`.
    pub d: T,
    pub tolerance_used: T,
}

impl<T: Scalar> OrderReport<T> {
    /// Largest residual magnitude over orders `1..=q`.
    pub fn max_residual_through(&self, q: usize) -> T {
        self.residuals
            .range(1..=q)
            .flat_map(|(_, v)| v.iter())
            .fold(T::zero(), |m, x| m.max(x.abs()))
    }

    pub fn e_norm(&self, order: usize) -> Option<ErrorNorms<T>> {
        self.e_norms.iter().copied().find(|e| e.order == order)
    }

    /// CSV with one row per tree: `order,tree_index,residual`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("order,tree_index,residual\n");
        for (q, v) in &self.residuals {
            for (j, r) in v.iter().enumerate() {
                out.push_str(&format!("{q},{},{:.16e}\n", j + 1, r));
            }
        }
        out
    }
}

impl<T: Scalar> fmt::Display for OrderReport<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scheme            {}", self.scheme)?;
        writeln!(f, "declared order    {}", self.declared_order)?;
        writeln!(
            f,
            "achieved order    {} (tol {:.1e})",
            self.achieved_order, self.tolerance_used
        )?;
        writeln!(f, "stage order       {}", self.stage_order)?;
        for (q, v) in &self.residuals {
            writeln!(
                f,
                "  order {:>2}: {:>4} trees, max |tau| = {:.3e}",
                q,
                v.len(),
                linf_norm(v)
            )?;
        }
        for e in &self.e_norms {
            writeln!(
                f,
                "E2^({}) = {:.3e}   Einf^({}) = {:.3e}",
                e.order, e.l2, e.order, e.linf
            )?;
        }
        write!(f, "D = {:.3e}", self.d)
    }
}

/// Evaluates all order conditions through `min(p + 2, 10)` and summarizes them.
pub fn verify_order<T: Scalar>(t: &ButcherTableau<T>, tol: T) -> OrderReport<T> {
    assert!(tol > T::zero(), "tolerance must be positive");
    let p = t.order();
    let top = (p + 2).min(MAX_TREE_ORDER);
    let mut residuals = BTreeMap::new();
    let mut unweighted = BTreeMap::new();
    for q in 1..=top {
        let (w, u): (Vec<T>, Vec<T>) = enumerate_trees(q)
            .expect("order within range")
            .iter()
            .map(|tree| residual_pair(t, tree))
            .unzip();
        residuals.insert(q, w);
        unweighted.insert(q, u);
    }
    let mut achieved_order = 0;
    for (q, v) in &residuals {
        if v.iter().all(|r| r.abs() <= tol) {
            achieved_order = *q;
        } else {
            break;
        }
    }
    let norms = |map: &BTreeMap<usize, Vec<T>>| {
        [p + 1, p + 2]
            .into_iter()
            .filter_map(|k| {
                map.get(&k).map(|v| ErrorNorms {
                    order: k,
                    l2: l2_norm(v),
                    linf: linf_norm(v),
                })
            })
            .collect::<Vec<_>>()
    };
    OrderReport {
        scheme: t.name().to_string(),
        declared_order: p,
        achieved_order,
        stage_order: stage_order(t, tol),
        e_norms: norms(&residuals),
        e_norms_unweighted: norms(&unweighted),
        residuals,
        d: t.max_coefficient(),
        tolerance_used: tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tableau::{explicit_euler, implicit_midpoint, load_builtin};

    #[test]
    fn leaf_and_chain2_weights() {
        let t = load_builtin::<f64>("DIRK(6,6)A").unwrap();
        assert_eq!(elementary_weights(&t, &RootedTree::leaf()), vec![1.0; 6]);
        let phi = elementary_weights(&t, &RootedTree::chain(2));
        for (p, c) in phi.iter().zip(t.c()) {
            assert!((p - c).abs() < 1e-15);
        }
    }

    #[test]
    fn dirk66_chain3_is_one_sixth() {
        let t = load_builtin::<f64>("DIRK(6,6)A").unwrap();
        let phi = elementary_weights(&t, &RootedTree::chain(3));
        let v: f64 = t.b().iter().zip(&phi).map(|(b, p)| b * p).sum();
        assert!((v - 1.0 / 6.0).abs() < 1e-13);
    }

    #[test]
    fn small_scheme_residuals() {
        let euler = explicit_euler::<f64>();
        assert_eq!(residual(&euler, &RootedTree::chain(2)), -0.5);
        let mid = implicit_midpoint::<f64>();
        let r = residual(&mid, &RootedTree::bushy(3));
        assert!((r + 1.0 / 24.0).abs() < 1e-16);
    }

    #[test]
    fn dirk86_residuals_through_order_six() {
        let t = load_builtin::<f64>("DIRK(8,6)SA").unwrap();
        for q in 1..=6 {
            for r in residuals_of_order(&t, q) {
                assert!(r.abs() <= 5e-13, "order {q}: {r:e}");
            }
        }
    }

    #[test]
    fn dirk66_table_row() {
        let t = load_builtin::<f64>("DIRK(6,6)A").unwrap();
        let rep = verify_order(&t, DEFAULT_ORDER_TOL);
        assert_eq!(rep.achieved_order, 6);
        assert_eq!(rep.stage_order, 1);
        let e7 = rep.e_norm(7).unwrap();
        assert!((e7.l2 - 4.21e-3).abs() < 0.005e-3, "{:e}", e7.l2);
        assert!((rep.d - 3.98).abs() < 0.005);
        assert!(e7.linf <= e7.l2);
    }

    #[test]
    fn dirk158_table_row() {
        let t = load_builtin::<f64>("DIRK(15,8)SA").unwrap();
        let rep = verify_order(&t, DEFAULT_ORDER_TOL);
        let e9 = rep.e_norm(9).unwrap();
        assert!((e9.linf - 1.18e-6).abs() < 0.005e-6, "{:e}", e9.linf);
        assert!((rep.d - 1.00).abs() < 0.005);
        // p + 2 = 10 is the largest supported order
        assert!(rep.e_norm(10).is_some());
    }

    #[test]
    fn trapezoid_has_stage_order_two() {
        let t = ButcherTableau::new("trapezoid", 2, vec![vec![0.0, 0.0], vec![0.5, 0.5]], vec![0.5, 0.5]).unwrap();
        assert_eq!(stage_order(&t, 1e-14), 2);
    }

    #[test]
    fn csv_has_row_per_tree() {
        let t = implicit_midpoint::<f64>();
        let rep = verify_order(&t, 1e-14);
        assert_eq!(rep.achieved_order, 2);
        assert_eq!(rep.stage_order, 1);
        // orders 1..=4: 1 + 1 + 2 + 4 trees
        assert_eq!(rep.to_csv().lines().count(), 1 + 8);
        assert!(rep.to_string().contains("achieved order    2"));
    }
}
