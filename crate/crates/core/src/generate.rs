//! Seeded generators for test and benchmark networks.
//!
//! Every generator takes a caller-owned RNG, so a `ChaCha8Rng` seeded with
//! [`rng`] makes corpora reproducible across runs and platforms.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::{Distribution, Exp1};

use crate::error::Result;
use crate::model::{build_tree, CausalTree, Evidence, NetworkFile, NodeSpec};

/// The generator RNG used throughout the crate.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A probability vector drawn from the flat Dirichlet distribution.
pub fn dirichlet_row<R: Rng>(k: usize, rng: &mut R) -> Vec<f64> {
    let mut row: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = row.iter().sum();
    row.iter_mut().for_each(|x| *x /= s);
    row
}

/// A row-stochastic `rows x cols` table with Dirichlet rows.
pub fn random_cpt<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..rows).map(|_| dirichlet_row(cols, rng)).collect()
}

/// Hard evidence half of the time, otherwise a strictly positive soft
/// likelihood.
pub fn random_evidence<R: Rng>(k: usize, rng: &mut R) -> Vec<f64> {
    if rng.random_bool(0.5) {
        let mut v = vec![0.0; k];
        v[rng.random_range(0..k)] = 1.0;
        v
    } else {
        (0..k).map(|_| rng.random_range(0.05..1.0)).collect()
    }
}

/// Soft likelihood with entries in `[0.5, 1]`. Each such leaf scales
/// `P(evidence)` by at least 1/2, so a thousand of them stay far above the
/// `f64` underflow threshold.
pub fn mild_evidence<R: Rng>(k: usize, rng: &mut R) -> Vec<f64> {
    (0..k).map(|_| rng.random_range(0.5..=1.0)).collect()
}

/// A tree shape: `children[i]` lists the ordered children of node `i`,
/// node 0 is the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shape {
    pub children: Vec<Vec<usize>>,
    pub names: Vec<String>,
}

impl Shape {
    fn with_nodes(n: usize) -> Shape {
        Shape {
            children: vec![Vec::new(); n],
            names: (0..n).map(|i| format!("n{i}")).collect(),
        }
    }

    /// Attaches random CPTs, prior and evidence, all over domain `k`.
    pub fn realize<R: Rng>(&self, k: usize, rng: &mut R) -> Result<CausalTree> {
        let n = self.children.len();
        let mut parent = vec![None; n];
        for (p, cs) in self.children.iter().enumerate() {
            for &c in cs {
                parent[c] = Some(p);
            }
        }
        // declaration order = preorder, so children keep their order
        let mut order = Vec::with_capacity(n);
        let mut stack = vec![0];
        while let Some(x) = stack.pop() {
            order.push(x);
            stack.extend(self.children[x].iter().rev());
        }
        let nodes = order
            .into_iter()
            .map(|i| NodeSpec {
                id: self.names[i].clone(),
                domain: k,
                parent: parent[i].map(|p| self.names[p].clone()),
                cpt: parent[i].map(|_| random_cpt(k, k, rng)),
                prior: parent[i].is_none().then(|| dirichlet_row(k, rng)),
                evidence: self.children[i].is_empty().then(|| random_evidence(k, rng)),
            })
            .collect();
        build_tree(&NetworkFile { nodes })
    }
}

/// Caterpillar `x1 … xL` where each `xi` has children `ei` and `x(i+1)`, and
/// `xL` has `eL` and `e(L+1)`. `L = max(n / 2, 1)`, so `n = 600` gives 601
/// nodes of depth 300.
pub fn chain_shape(n: usize) -> Shape {
    let l = (n / 2).max(1);
    let mut s = Shape::with_nodes(2 * l + 1);
    // x_i at 2(i-1), e_i at 2(i-1)+1, e_(L+1) last
    for i in 0..l {
        let x = 2 * i;
        s.names[x] = format!("x{}", i + 1);
        s.names[x + 1] = format!("e{}", i + 1);
        let next = if i + 1 < l { 2 * (i + 1) } else { 2 * l };
        s.children[x] = vec![x + 1, next];
    }
    s.names[2 * l] = format!("e{}", l + 1);
    s
}

/// Complete binary tree with `⌈(n+1)/2⌉` leaves (at least 2), split as
/// evenly as possible at every node.
pub fn balanced_shape(n: usize) -> Shape {
    let leaves = n.div_ceil(2).max(2);
    let mut children = Vec::new();
    fn build(m: usize, children: &mut Vec<Vec<usize>>) -> usize {
        let id = children.len();
        children.push(Vec::new());
        if m > 1 {
            let l = build(m.div_ceil(2), children);
            let r = build(m / 2, children);
            children[id] = vec![l, r];
        }
        id
    }
    build(leaves, &mut children);
    let n = children.len();
    Shape {
        names: (0..n).map(|i| format!("n{i}")).collect(),
        children,
    }
}

/// Uniformly random full binary tree shape with `⌈(n+1)/2⌉` leaves (at
/// least 2), by Rémy's algorithm.
pub fn random_shape<R: Rng>(n: usize, rng: &mut R) -> Shape {
    let leaves = n.div_ceil(2).max(2);
    let total = 2 * leaves - 1;
    let mut parent: Vec<Option<usize>> = vec![None];
    let mut children: Vec<Vec<usize>> = vec![Vec::new()];
    let mut root = 0;
    while children.len() < total {
        let target = rng.random_range(0..children.len());
        let inner = children.len();
        let leaf = inner + 1;
        children.push(Vec::new());
        children.push(Vec::new());
        parent.push(parent[target]);
        parent.push(Some(inner));
        match parent[target] {
            None => root = inner,
            Some(p) => {
                let slot = children[p].iter().position(|&c| c == target).expect("child");
                children[p][slot] = inner;
            }
        }
        parent[target] = Some(inner);
        children[inner] = if rng.random_bool(0.5) { vec![target, leaf] } else { vec![leaf, target] };
    }
    // relabel so the root is 0
    let mut relabel = vec![0; total];
    let mut order = Vec::with_capacity(total);
    let mut stack = vec![root];
    while let Some(x) = stack.pop() {
        relabel[x] = order.len();
        order.push(x);
        stack.extend(children[x].iter().rev());
    }
    let mut s = Shape::with_nodes(total);
    for &old in &order {
        s.children[relabel[old]] = children[old].iter().map(|&c| relabel[c]).collect();
    }
    s
}

/// Uniformly shaped tree where each node has 0 to 3 children; not binary, so
/// it exercises normalization. Exactly `n` nodes.
pub fn random_general_shape<R: Rng>(n: usize, rng: &mut R) -> Shape {
    let n = n.max(2);
    let mut s = Shape::with_nodes(n);
    for i in 1..n {
        let candidates: Vec<usize> = (0..i).filter(|&p| s.children[p].len() < 3).collect();
        let p = *candidates.choose(rng).expect("a node with room");
        s.children[p].push(i);
    }
    s
}

pub fn chain_tree<R: Rng>(n: usize, k: usize, rng: &mut R) -> Result<CausalTree> {
    chain_shape(n).realize(k, rng)
}

pub fn balanced_tree<R: Rng>(n: usize, k: usize, rng: &mut R) -> Result<CausalTree> {
    balanced_shape(n).realize(k, rng)
}

pub fn random_tree<R: Rng>(n: usize, k: usize, rng: &mut R) -> Result<CausalTree> {
    random_shape(n, rng).realize(k, rng)
}

/// Resets every leaf to the uniform likelihood. Large trees start this way
/// in benchmarks: thousands of informative leaves drive `P(evidence)` below
/// the smallest `f64`.
pub fn clear_evidence(tree: &mut CausalTree) {
    for leaf in tree.leaves() {
        let k = tree.node(leaf).domain();
        tree.set_evidence(leaf, Evidence::uniform(k)).expect("leaf");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_have_expected_sizes() {
        let c = chain_shape(600);
        assert_eq!(c.children.len(), 601);
        let t = chain_tree(600, 2, &mut rng(1)).unwrap();
        assert_eq!(t.depth(), 300);
        assert!(t.is_complete_binary());
        let b = balanced_tree(31, 2, &mut rng(2)).unwrap();
        assert_eq!((b.len(), b.depth()), (31, 4));
        for n in [3, 7, 25, 100] {
            let t = random_tree(n, 3, &mut rng(n as u64)).unwrap();
            assert!(t.is_complete_binary());
            assert_eq!(t.len(), 2 * n.div_ceil(2) - 1);
        }
        let g = random_general_shape(20, &mut rng(5));
        assert_eq!(g.children.iter().map(Vec::len).sum::<usize>(), 19);
    }

    #[test]
    fn deterministic_under_seed() {
        let a = random_tree(41, 2, &mut rng(9)).unwrap();
        let b = random_tree(41, 2, &mut rng(9)).unwrap();
        assert_eq!(a, b);
    }
}
