//! λ, π and belief queries over a contraction index.
//!
//! No λ or π vector is stored. A query reads each node's equations at the
//! highest level where it has any, and `calc` walks once up the levels,
//! returning π of the node together with λ of its two children at that level.

use super::{Coefficient, ContractionIndex, SlotId};
use crate::error::{Error, Result};
use crate::linalg::hadamard;
use crate::model::{Belief, NodeId};

/// `(π(x), λ(left child), λ(right child))` for `x` in some contracted tree.
#[derive(Debug, Clone, PartialEq)]
pub struct PiLambdaTriple {
    pub p: Vec<f64>,
    pub l: Vec<f64>,
    pub r: Vec<f64>,
}

impl<C: Coefficient> ContractionIndex<C> {
    /// λ of any node of `T₀`.
    pub fn lambda_query(&self, x: NodeId) -> Result<Vec<f64>> {
        self.tree.get(x)?;
        Ok(self.lambda_rec(x))
    }

    /// π of any node of `T₀`.
    pub fn pi_query(&self, x: NodeId) -> Result<Vec<f64>> {
        self.tree.get(x)?;
        let node = self.tree.node(x);
        if node.parent().is_none() {
            return Ok(self.prior().to_vec());
        }
        if !node.is_leaf() {
            return Ok(self.calc(x, self.ind_unchecked(x)).p);
        }
        Ok(self.leaf_pi(x))
    }

    /// Posterior of `x`. Shares a single upward pass between λ and π.
    pub fn belief_query(&self, x: NodeId) -> Result<Belief> {
        self.tree.get(x)?;
        let node = self.tree.node(x);
        let (lambda, pi) = if node.is_leaf() {
            (self.evidence_of(x).to_vec(), self.leaf_pi(x))
        } else {
            let r = self.ind_unchecked(x);
            let t = self.calc(x, r);
            let [(_, sl), (_, sr)] = self.levels[r].at(x).children.expect("internal");
            (self.lambda_equation(sl, &t.l, sr, &t.r), t.p)
        };
        let joint = hadamard(&lambda, &pi, &self.rec);
        Belief::from_unnormalized(self.tree.name(x), &joint)
    }

    /// The triple for `x` at `level`, where `x` must be internal.
    pub fn calc_pi_lambda(&self, x: NodeId, level: usize) -> Result<PiLambdaTriple> {
        self.tree.get(x)?;
        let internal = self
            .levels
            .get(level)
            .and_then(|l| l.node(x))
            .is_some_and(|n| n.children.is_some());
        if !internal {
            return Err(Error::LevelOutOfRange {
                node: self.tree.name(x).to_string(),
                level,
            });
        }
        Ok(self.calc(x, level))
    }

    fn prior(&self) -> &[f64] {
        self.tree.node(self.tree.root()).prior().expect("root prior")
    }

    fn lambda_equation(&self, sl: SlotId, ll: &[f64], sr: SlotId, lr: &[f64]) -> Vec<f64> {
        self.rec.equation();
        let a = self.slots[sl.0].coeff.apply(ll, &self.rec);
        let b = self.slots[sr.0].coeff.apply(lr, &self.rec);
        hadamard(&a, &b, &self.rec)
    }

    /// `downᵀ · (π(parent) * side · λ(sibling))`
    fn pi_equation(&self, down: SlotId, pi: &[f64], side: SlotId, lambda: &[f64]) -> Vec<f64> {
        self.rec.equation();
        let m = self.slots[side.0].coeff.apply(lambda, &self.rec);
        let t = hadamard(pi, &m, &self.rec);
        self.slots[down.0].coeff.apply_transpose(&t, &self.rec)
    }

    fn lambda_rec(&self, x: NodeId) -> Vec<f64> {
        if self.tree.node(x).is_leaf() {
            return self.evidence_of(x).to_vec();
        }
        // at this level one child is a leaf, so the recursion is a path
        let r = self.ind_unchecked(x);
        let [(a, sa), (b, sb)] = self.levels[r].at(x).children.expect("internal");
        let la = self.lambda_rec(a);
        let lb = self.lambda_rec(b);
        self.lambda_equation(sa, &la, sb, &lb)
    }

    /// λ(c) for a node removed in round `r`, given λ of `target`, the node
    /// that replaced `c` in `T_{r+1}`. Walks the nodes raked away between.
    fn chain_lambda(&self, c: NodeId, r: usize, target: NodeId, lt: &[f64]) -> Vec<f64> {
        let [(a, sa), (b, sb)] = self.levels[r].at(c).children.expect("internal");
        let lam = |y: NodeId| {
            if y == target {
                lt.to_vec()
            } else if self.tree.node(y).is_leaf() {
                self.evidence_of(y).to_vec()
            } else {
                debug_assert_eq!(self.removed_in(y), Some(r));
                self.chain_lambda(y, r, target, lt)
            }
        };
        let (la, lb) = (lam(a), lam(b));
        self.lambda_equation(sa, &la, sb, &lb)
    }

    fn calc(&self, x: NodeId, r: usize) -> PiLambdaTriple {
        let [(cl, _), (cr, _)] = self.levels[r].at(x).children.expect("internal");
        if r == self.final_level() {
            return PiLambdaTriple {
                p: self.prior().to_vec(),
                l: self.evidence_of(cl).to_vec(),
                r: self.evidence_of(cr).to_vec(),
            };
        }

        if self.removed_in(x) != Some(r) {
            let up = self.calc(x, r + 1);
            let [(nl, _), (nr, _)] = self.levels[r + 1].at(x).children.expect("internal");
            let l = if cl == nl { up.l } else { self.chain_lambda(cl, r, nl, &up.l) };
            let rr = if cr == nr { up.r } else { self.chain_lambda(cr, r, nr, &up.r) };
            return PiLambdaTriple { p: up.p, l, r: rr };
        }

        // x is raked away in round r; find the nearest ancestor g that is not
        let mut chain = vec![x];
        let (g, side) = loop {
            let top = *chain.last().expect("nonempty");
            let (p, side) = self.levels[r].at(top).parent.expect("removed node has a parent");
            if self.removed_in(p) == Some(r) {
                chain.push(p);
            } else {
                break (p, side);
            }
        };
        let up = self.calc(g, r + 1);
        let pick = |s| if s == super::Side::Left { &up.l } else { &up.r };
        let next_g = self.levels[r + 1].at(g);
        let (w, _) = next_g.child(side);
        let (_, sv) = next_g.child(side.other());
        let lam_w = pick(side);

        // the rewritten sibling coefficient already folds in every rake of
        // this round on that side, so λ of its level r+1 child suffices
        let (_, s_top) = self.levels[r].at(g).child(side);
        let mut pi = self.pi_equation(s_top, &up.p, sv, pick(side.other()));
        for pair in chain.windows(2).rev() {
            let (next, y) = (pair[0], pair[1]);
            let [(a, sa), (b, sb)] = self.levels[r].at(y).children.expect("internal");
            let (down, leaf, s_leaf) = if a == next { (sa, b, sb) } else { (sb, a, sa) };
            pi = self.pi_equation(down, &pi, s_leaf, self.evidence_of(leaf));
        }

        let lam = |c: NodeId| {
            if c == w {
                lam_w.clone()
            } else if self.tree.node(c).is_leaf() {
                self.evidence_of(c).to_vec()
            } else {
                self.chain_lambda(c, r, w, lam_w)
            }
        };
        PiLambdaTriple {
            p: pi,
            l: lam(cl),
            r: lam(cr),
        }
    }

    /// π of a `T₀` leaf, from its parent at the level the leaf was raked
    /// (or the final level for the two extreme leaves).
    fn leaf_pi(&self, x: NodeId) -> Vec<f64> {
        let r = self.ind_unchecked(x);
        let (p, side) = self.levels[r].at(x).parent.expect("leaf has parent");
        let t = self.calc(p, r);
        let (_, down) = self.levels[r].at(p).child(side);
        let (_, s_other) = self.levels[r].at(p).child(side.other());
        let other = if side == super::Side::Left { &t.r } else { &t.l };
        self.pi_equation(down, &t.p, s_other, other)
    }
}
