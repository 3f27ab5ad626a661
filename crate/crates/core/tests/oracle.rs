mod common;

use dirk::conditions::{elementary_weights, residual};
use dirk::tableau::load_builtin;
use dirk::trees::{enumerate_trees, RootedTree};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn recursive_weights_match_tensor_summation() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for k in 0..20 {
        let s = 1 + k % 3;
        let t = common::random_tableau(&mut rng, s);
        for q in 1..=6 {
            for tree in enumerate_trees(q).unwrap() {
                let fast = elementary_weights(&t, tree);
                let slow = common::brute_force_phi(&t, tree);
                for (f, b) in fast.iter().zip(&slow) {
                    assert!((f - b).abs() <= 1e-14 * (1.0 + b.abs()), "{tree:?}: {f} vs {b}");
                }
                let r = residual(&t, tree);
                let rb = common::brute_force_residual(&t, tree);
                assert!((r - rb).abs() <= 1e-14 * (1.0 + rb.abs()));
            }
        }
    }
}

#[test]
fn residual_ignores_child_order() {
    let t = load_builtin::<f64>("DIRK(9,7)A").unwrap();
    let a = RootedTree::chain(2);
    let b = RootedTree::bushy(3);
    let c = RootedTree::leaf();
    let x = RootedTree::from_children(vec![a.clone(), b.clone(), c.clone()]);
    let y = RootedTree::from_children(vec![c, a, b]);
    assert_eq!(x, y);
    assert_eq!(residual(&t, &x).to_bits(), residual(&t, &y).to_bits());
}
