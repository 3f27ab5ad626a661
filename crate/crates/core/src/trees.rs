//! Unordered rooted trees up to order 10 with their symmetry and density.
//!
//! Trees are enumerated as canonical level sequences (root at level 1, each
//! subtree listed in pre-order, sibling subtrees in non-increasing
//! lexicographic order of their level sequences). Successors are generated
//! with the Beyer–Hedetniemi rule, so every isomorphism class appears exactly
//! once and the output order is deterministic: from the chain `1 2 .. q` down
//! to the bushy tree `1 2 2 .. 2`.

use std::cmp::Ordering;
use std::fmt;
use std::sync::OnceLock;

use crate::error::TreeOrderError;

/// Largest supported tree order (`p + 2` for eighth-order schemes).
pub const MAX_TREE_ORDER: usize = 10;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RootedTree {
    children: Vec<RootedTree>,
    order: usize,
    symmetry: u64,
    density: u64,
    levels: Vec<u8>,
}

impl RootedTree {
    pub fn leaf() -> Self {
        Self::from_children(Vec::new())
    }

    /// Builds a tree from its root's subtrees, in any order.
    pub fn from_children(mut children: Vec<RootedTree>) -> Self {
        children.sort_by(|a, b| b.cmp(a));
        let order = 1 + children.iter().map(|c| c.order).sum::<usize>();
        let density = order as u64 * children.iter().map(|c| c.density).product::<u64>();
        let mut symmetry = 1u64;
        let mut i = 0;
        while i < children.len() {
            let mut m = 1;
            while i + m < children.len() && children[i + m] == children[i] {
                m += 1;
            }
            symmetry *= children[i].symmetry.pow(m as u32) * factorial(m as u64);
            i += m;
        }
        let mut levels = Vec::with_capacity(order);
        levels.push(1u8);
        for c in &children {
            levels.extend(c.levels.iter().map(|l| l + 1));
        }
        Self {
            children,
            order,
            symmetry,
            density,
            levels,
        }
    }

    /// Parses a level sequence such as `[1, 2, 3, 3, 2]`; the root must be the
    /// only vertex at the first level.
    pub fn from_level_sequence(levels: &[u8]) -> Option<Self> {
        fn build(levels: &[u8]) -> RootedTree {
            let base = levels[0];
            let mut children = Vec::new();
            let mut i = 1;
            while i < levels.len() {
                let start = i;
                i += 1;
                while i < levels.len() && levels[i] > base + 1 {
                    i += 1;
                }
                children.push(build(&levels[start..i]));
            }
            RootedTree::from_children(children)
        }
        let (&root, rest) = levels.split_first()?;
        if root == 0 || rest.iter().any(|&l| l <= root) {
            return None;
        }
        if levels.windows(2).any(|w| w[1] > w[0] + 1) {
            return None;
        }
        Some(build(levels))
    }

    /// Path graph with `q` vertices (the tall tree).
    pub fn chain(q: usize) -> Self {
        assert!(q >= 1);
        (1..q).fold(Self::leaf(), |t, _| Self::from_children(vec![t]))
    }

    /// Root with `q - 1` leaf children.
    pub fn bushy(q: usize) -> Self {
        assert!(q >= 1);
        Self::from_children(vec![Self::leaf(); q - 1])
    }

    pub fn children(&self) -> &[RootedTree] {
        &self.children
    }

    /// Number of vertices.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Size of the automorphism group, sigma(t).
    pub fn symmetry(&self) -> u64 {
        self.symmetry
    }

    /// Density gamma(t) = |t| * prod gamma(children).
    pub fn density(&self) -> u64 {
        self.density
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Canonical level sequence (root at level 1).
    pub fn level_sequence(&self) -> &[u8] {
        &self.levels
    }
}

impl Ord for RootedTree {
    fn cmp(&self, other: &Self) -> Ordering {
        self.levels.cmp(&other.levels)
    }
}

impl PartialOrd for RootedTree {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Debug dump form: the level sequence separated by spaces, e.g. `1 2 3 3 2`.
impl fmt::Display for RootedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for l in &self.levels {
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{l}")?;
            first = false;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TreeStats {
    pub sigma: u64,
    pub gamma: u64,
}

pub fn tree_stats(t: &RootedTree) -> TreeStats {
    TreeStats {
        sigma: t.symmetry,
        gamma: t.density,
    }
}

fn factorial(n: u64) -> u64 {
    (1..=n).product()
}

fn check_order(q: usize) -> Result<(), TreeOrderError> {
    if (1..=MAX_TREE_ORDER).contains(&q) {
        Ok(())
    } else {
        Err(TreeOrderError {
            order: q,
            max: MAX_TREE_ORDER,
        })
    }
}

/// Beyer–Hedetniemi successor of a canonical level sequence, in place.
/// Returns `false` once the bushy tree has been reached.
fn next_level_sequence(levels: &mut [u8]) -> bool {
    let n = levels.len();
    let Some(p) = (0..n).rev().find(|&i| levels[i] > 2) else {
        return false;
    };
    let q = (0..p)
        .rev()
        .find(|&i| levels[i] == levels[p] - 1)
        .expect("a vertex above level 2 has a parent");
    let shift = p - q;
    for i in p..n {
        levels[i] = levels[i - shift];
    }
    true
}

fn generate(q: usize) -> Vec<RootedTree> {
    let mut levels: Vec<u8> = (1..=q as u8).collect();
    let mut out = Vec::new();
    loop {
        out.push(RootedTree::from_level_sequence(&levels).expect("canonical sequence"));
        if !next_level_sequence(&mut levels) {
            break;
        }
    }
    out
}

static CACHE: [OnceLock<Vec<RootedTree>>; MAX_TREE_ORDER] = [const { OnceLock::new() }; MAX_TREE_ORDER];

/// All rooted trees with `q` vertices, enumerated once and cached.
pub fn enumerate_trees(q: usize) -> Result<&'static [RootedTree], TreeOrderError> {
    check_order(q)?;
    Ok(CACHE[q - 1].get_or_init(|| generate(q)))
}

/// `sum_{q <= p} |T_q|`: the number of order conditions for order `p`.
pub fn cumulative_condition_count(p: usize) -> Result<usize, TreeOrderError> {
    check_order(p)?;
    (1..=p).map(|q| enumerate_trees(q).map(<[_]>::len)).sum()
}

/// One tree per line as a level sequence.
pub fn dump_trees(q: usize) -> Result<String, TreeOrderError> {
    Ok(enumerate_trees(q)?
        .iter()
        .map(|t| format!("{t}\n"))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    const TABLE_COUNTS: [usize; 10] = [1, 1, 2, 4, 9, 20, 48, 115, 286, 719];

    #[test]
    fn counts_match_table() {
        for (q, &n) in (1..=10).zip(TABLE_COUNTS.iter()) {
            assert_eq!(enumerate_trees(q).unwrap().len(), n, "q = {q}");
        }
        assert_eq!(cumulative_condition_count(6).unwrap(), 37);
        assert_eq!(cumulative_condition_count(8).unwrap(), 200);
        assert_eq!(cumulative_condition_count(1).unwrap(), 1);
    }

    #[test]
    fn out_of_range_orders() {
        assert!(enumerate_trees(0).is_err());
        assert!(enumerate_trees(11).is_err());
        assert_eq!(
            cumulative_condition_count(11),
            Err(TreeOrderError { order: 11, max: 10 })
        );
    }

    #[test]
    fn order_four_in_canonical_order() {
        let dump = dump_trees(4).unwrap();
        assert_eq!(dump, "1 2 3 4\n1 2 3 3\n1 2 3 2\n1 2 2 2\n");
    }

    #[test]
    fn chain_and_bushy_stats() {
        let chain = RootedTree::chain(3);
        assert_eq!(tree_stats(&chain), TreeStats { sigma: 1, gamma: 6 });
        let bushy = RootedTree::bushy(4);
        assert_eq!(tree_stats(&bushy), TreeStats { sigma: 6, gamma: 4 });
        assert_eq!(RootedTree::chain(10).density(), 3_628_800);
    }

    #[test]
    fn no_duplicates_and_canonical() {
        for q in 1..=10 {
            let trees = enumerate_trees(q).unwrap();
            let set: HashSet<&[u8]> = trees.iter().map(|t| t.level_sequence()).collect();
            assert_eq!(set.len(), trees.len());
            for t in trees {
                assert_eq!(t.order(), q);
                let rebuilt = RootedTree::from_children(t.children().iter().rev().cloned().collect());
                assert_eq!(&rebuilt, t);
                let sum: usize = 1 + t.children().iter().map(RootedTree::order).sum::<usize>();
                assert_eq!(sum, q);
                let gamma = q as u64 * t.children().iter().map(RootedTree::density).product::<u64>();
                assert_eq!(gamma, t.density());
            }
            // strictly decreasing enumeration order
            assert!(trees.windows(2).all(|w| w[0] > w[1]));
        }
    }

    #[test]
    fn density_bounded_by_factorial() {
        for q in 1..=10 {
            let qf = factorial(q as u64);
            for t in enumerate_trees(q).unwrap() {
                assert!(t.symmetry() >= 1 && t.density() >= 1);
                assert!(t.density() <= qf);
                assert_eq!(t.density() == qf, *t == RootedTree::chain(q));
            }
        }
    }

    #[test]
    fn level_sequence_parsing() {
        let t = RootedTree::from_level_sequence(&[1, 2, 3, 3, 2]).unwrap();
        assert_eq!(t.to_string(), "1 2 3 3 2");
        assert_eq!(t.symmetry(), 2);
        assert_eq!(t.density(), 5 * 3);
        // non-canonical input is canonicalized
        let u = RootedTree::from_level_sequence(&[1, 2, 2, 3, 3]).unwrap();
        assert_eq!(u, t);
        assert!(RootedTree::from_level_sequence(&[1, 3]).is_none());
        assert!(RootedTree::from_level_sequence(&[1, 2, 1]).is_none());
        assert!(RootedTree::from_level_sequence(&[]).is_none());
    }

    #[test]
    fn concurrent_first_access() {
        let handles: Vec<_> = (0..8)
            .map(|_| std::thread::spawn(|| enumerate_trees(9).unwrap().len()))
            .collect();
        for h in handles {
            assert_eq!(h.join().unwrap(), 286);
        }
    }
}
