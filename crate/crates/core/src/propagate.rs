//! Linear-time λ/π propagation and the depth-bounded lazy variant.
//!
//! Full propagation solves, for every node `X` with parent `U`, sibling(s)
//! `V` and children `Y`, `Z`:
//!
//! ```text
//! λ(X) = (M_{Y|X} · λ(Y)) * (M_{Z|X} · λ(Z))
//! π(X) = M_{X|U}ᵀ · (π(U) * (M_{V|U} · λ(V)))
//! Bel(X) = α · λ(X) * π(X)
//! ```
//!
//! The recurrences are applied to any arity; on complete binary trees they
//! are exactly the two-child forms above.

use crate::counters::{OpCounters, OpRecorder};
use crate::error::{Error, Result};
use crate::linalg::hadamard;
use crate::model::{Belief, CausalTree, Evidence, NodeId};

/// Solved λ, π and Bel for every node of a tree.
#[derive(Debug, Clone)]
pub struct PropagationTable {
    lambda: Vec<Vec<f64>>,
    pi: Vec<Vec<f64>>,
    bel: Vec<Belief>,
    names: Vec<String>,
    pub counters: OpCounters,
}

impl PropagationTable {
    pub fn lambda(&self, id: NodeId) -> &[f64] {
        &self.lambda[id.0]
    }

    pub fn pi(&self, id: NodeId) -> &[f64] {
        &self.pi[id.0]
    }

    /// Cached belief of `id`.
    pub fn belief(&self, id: NodeId) -> Result<&Belief> {
        self.bel
            .get(id.0)
            .ok_or_else(|| Error::UnknownNode(id.to_string()))
    }

    /// Cached belief looked up by node name.
    pub fn belief_by_name(&self, name: &str) -> Result<&Belief> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| &self.bel[i])
            .ok_or_else(|| Error::UnknownNode(name.to_string()))
    }

    pub fn beliefs(&self) -> &[Belief] {
        &self.bel
    }
}

/// Runs one bottom-up λ pass and one top-down π pass.
pub fn full_propagate(tree: &CausalTree) -> Result<PropagationTable> {
    let rec = OpRecorder::new();
    let mut table = full_propagate_with(tree, &rec)?;
    table.counters = rec.snapshot();
    Ok(table)
}

/// [`full_propagate`] charging work to an external recorder.
pub fn full_propagate_with(tree: &CausalTree, rec: &OpRecorder) -> Result<PropagationTable> {
    let before = rec.snapshot();
    let n = tree.len();
    let mut lambda: Vec<Vec<f64>> = vec![Vec::new(); n];
    // message M_{c|parent(c)} · λ(c), reused by the π pass
    let mut message: Vec<Vec<f64>> = vec![Vec::new(); n];

    for &id in tree.preorder().iter().rev() {
        let node = tree.node(id);
        if node.is_leaf() {
            lambda[id.0] = node.evidence().expect("leaf evidence").likelihood().to_vec();
        } else {
            rec.equation();
            let mut acc: Option<Vec<f64>> = None;
            for &c in node.children() {
                let m = &message[c.0];
                acc = Some(match acc {
                    None => m.clone(),
                    Some(a) => hadamard(&a, m, rec),
                });
            }
            lambda[id.0] = acc.expect("internal node has children");
        }
        if node.parent().is_some() {
            message[id.0] = node.cpt().expect("edge cpt").mul_vec(&lambda[id.0], rec);
        }
    }

    let mut pi: Vec<Vec<f64>> = vec![Vec::new(); n];
    for &id in tree.preorder() {
        let node = tree.node(id);
        match node.parent() {
            None => pi[id.0] = node.prior().expect("root prior").to_vec(),
            Some(p) => {
                rec.equation();
                let mut acc = pi[p.0].clone();
                for &s in tree.node(p).children() {
                    if s != id {
                        acc = hadamard(&acc, &message[s.0], rec);
                    }
                }
                pi[id.0] = node.cpt().expect("edge cpt").tmul_vec(&acc, rec);
            }
        }
    }

    let mut bel = Vec::with_capacity(n);
    for id in tree.ids() {
        let joint = hadamard(&lambda[id.0], &pi[id.0], rec);
        bel.push(Belief::from_unnormalized(tree.name(id), &joint)?);
    }

    Ok(PropagationTable {
        lambda,
        pi,
        bel,
        names: tree.nodes().iter().map(|n| n.name().to_string()).collect(),
        counters: rec.snapshot() - before,
    })
}

/// Cached λ vectors with π recomputed on demand along the root path.
///
/// Updates touch only the ancestors of the changed leaf and queries walk a
/// single root-to-node path, so both cost `O(k² D)`.
#[derive(Debug, Clone)]
pub struct LazyState {
    tree: CausalTree,
    lambda: Vec<Vec<f64>>,
    rec: OpRecorder,
}

impl LazyState {
    pub fn new(tree: CausalTree) -> Self {
        let rec = OpRecorder::new();
        let mut lambda = vec![Vec::new(); tree.len()];
        for &id in tree.preorder().iter().rev() {
            lambda[id.0] = compute_lambda(&tree, &lambda, id, &rec);
        }
        LazyState { tree, lambda, rec }
    }

    pub fn tree(&self) -> &CausalTree {
        &self.tree
    }

    pub fn lambda(&self, id: NodeId) -> &[f64] {
        &self.lambda[id.0]
    }

    pub fn counters(&self) -> OpCounters {
        self.rec.snapshot()
    }

    /// Sets the evidence at `leaf` and refreshes λ along its ancestor path.
    pub fn lazy_update(&mut self, leaf: NodeId, evidence: Evidence) -> Result<()> {
        self.tree.set_evidence(leaf, evidence)?;
        self.lambda[leaf.0] = self.tree.evidence(leaf).expect("leaf").likelihood().to_vec();
        let mut cur = self.tree.node(leaf).parent();
        while let Some(a) = cur {
            self.lambda[a.0] = compute_lambda(&self.tree, &self.lambda, a, &self.rec);
            cur = self.tree.node(a).parent();
        }
        Ok(())
    }

    /// Belief of `id` from cached λ and π computed along the root path.
    pub fn lazy_query(&self, id: NodeId) -> Result<Belief> {
        let tree = &self.tree;
        tree.get(id)?;
        let mut path = vec![id];
        while let Some(p) = tree.node(*path.last().expect("nonempty")).parent() {
            path.push(p);
        }
        let rec = &self.rec;
        let mut pi = tree.node(tree.root()).prior().expect("root prior").to_vec();
        for w in path.windows(2).rev() {
            let (child, parent) = (w[0], w[1]);
            rec.equation();
            for &s in tree.node(parent).children() {
                if s != child {
                    let m = tree.node(s).cpt().expect("edge cpt").mul_vec(&self.lambda[s.0], rec);
                    pi = hadamard(&pi, &m, rec);
                }
            }
            pi = tree.node(child).cpt().expect("edge cpt").tmul_vec(&pi, rec);
        }
        let joint = hadamard(&self.lambda[id.0], &pi, rec);
        Belief::from_unnormalized(tree.name(id), &joint)
    }
}

fn compute_lambda(tree: &CausalTree, lambda: &[Vec<f64>], id: NodeId, rec: &OpRecorder) -> Vec<f64> {
    let node = tree.node(id);
    if node.is_leaf() {
        return node.evidence().expect("leaf evidence").likelihood().to_vec();
    }
    rec.equation();
    let mut acc: Option<Vec<f64>> = None;
    for &c in node.children() {
        let m = tree.node(c).cpt().expect("edge cpt").mul_vec(&lambda[c.0], rec);
        acc = Some(match acc {
            None => m,
            Some(a) => hadamard(&a, &m, rec),
        });
    }
    acc.expect("internal node has children")
}
