#![allow(dead_code)]

use dirk::tableau::ButcherTableau;
use dirk::trees::RootedTree;
use rand::Rng;

/// Parent of every vertex in the level sequence (`None` for the root).
pub fn parents(tree: &RootedTree) -> Vec<Option<usize>> {
    let levels = tree.level_sequence();
    (0..levels.len())
        .map(|k| (0..k).rev().find(|&j| levels[j] + 1 == levels[k]))
        .collect()
}

/// `Phi_i(tree)` by explicit summation over every index tuple of the tensor
/// form: one index per vertex, one factor `a[parent][child]` per edge.
pub fn brute_force_phi(t: &ButcherTableau<f64>, tree: &RootedTree) -> Vec<f64> {
    let s = t.stages();
    let par = parents(tree);
    let q = par.len();
    let mut phi = vec![0.0; s];
    let mut idx = vec![0usize; q];
    let total = s.pow(q as u32 - 1);
    for root in 0..s {
        for code in 0..total {
            idx[0] = root;
            let mut c = code;
            for slot in idx.iter_mut().skip(1) {
                *slot = c % s;
                c /= s;
            }
            let mut prod = 1.0;
            for k in 1..q {
                prod *= t.a(idx[par[k].unwrap()], idx[k]);
            }
            phi[root] += prod;
        }
    }
    phi
}

pub fn brute_force_residual(t: &ButcherTableau<f64>, tree: &RootedTree) -> f64 {
    let phi = brute_force_phi(t, tree);
    let sum: f64 = phi.iter().zip(t.b()).map(|(p, b)| p * b).sum();
    (sum - 1.0 / tree.density() as f64) / tree.symmetry() as f64
}

/// Dense random tableau with entries in `[-1, 1]`.
pub fn random_tableau(rng: &mut impl Rng, s: usize) -> ButcherTableau<f64> {
    let a = (0..s)
        .map(|_| (0..s).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let b = (0..s).map(|_| rng.random_range(-1.0..1.0)).collect();
    ButcherTableau::new("random", 1, a, b).unwrap()
}
