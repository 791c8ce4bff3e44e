//! Causal-tree data model.
//!
//! A [`CausalTree`] is a rooted tree of discrete variables. Every non-root node
//! carries the conditional matrix of the edge from its parent (rows indexed by
//! the parent's value, columns by the node's value), the root carries a prior,
//! and every leaf carries an evidence likelihood.

mod brute;
mod file;
mod normalize;

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{normalized, Matrix};

pub use brute::{brute_force_marginal, brute_force_marginals, DEFAULT_STATE_CAP};
pub use file::{build_tree, NetworkFile, NodeSpec};
pub use normalize::normalize_tree;

/// Tolerance used for every stochasticity check.
pub const STOCHASTIC_TOL: f64 = 1e-9;

/// Conditional probability matrix of an edge, rows = parent value.
pub type CondMatrix = Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Likelihood vector attached to a leaf. Hard evidence is a one-hot vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Evidence(Vec<f64>);

impl Evidence {
    pub fn new(likelihood: Vec<f64>) -> Self {
        Evidence(likelihood)
    }

    /// One-hot evidence on `value` over a domain of size `domain`.
    pub fn hard(domain: usize, value: usize) -> Self {
        let mut v = vec![0.0; domain];
        v[value] = 1.0;
        Evidence(v)
    }

    /// The uninformative likelihood `[1, ..., 1]`.
    pub fn uniform(domain: usize) -> Self {
        Evidence(vec![1.0; domain])
    }

    pub fn likelihood(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scaled(&self, s: f64) -> Evidence {
        Evidence(self.0.iter().map(|x| x * s).collect())
    }

    pub(crate) fn validate(&self, node: &str, domain: usize) -> Result<()> {
        if self.0.len() != domain {
            return Err(Error::DimensionMismatch {
                node: node.to_string(),
                expected: domain,
                found: self.0.len(),
            });
        }
        if self.0.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidProbability(node.to_string()));
        }
        if self.0.iter().all(|x| *x == 0.0) {
            return Err(Error::AllZeroLikelihood(node.to_string()));
        }
        Ok(())
    }
}

/// Posterior marginal of a node together with the normalizing constant used.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief {
    pub dist: Vec<f64>,
    pub normalizer: f64,
}

impl Belief {
    /// Normalizes `unnormalized`; zero total mass is impossible evidence.
    pub fn from_unnormalized(node: &str, unnormalized: &[f64]) -> Result<Belief> {
        let (dist, s) =
            normalized(unnormalized).ok_or_else(|| Error::ImpossibleEvidence(node.to_string()))?;
        Ok(Belief {
            dist,
            normalizer: 1.0 / s,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub(crate) name: String,
    pub(crate) domain: usize,
    pub(crate) parent: Option<NodeId>,
    pub(crate) children: Vec<NodeId>,
    pub(crate) cpt: Option<CondMatrix>,
    pub(crate) prior: Option<Vec<f64>>,
    pub(crate) evidence: Option<Evidence>,
}

impl Node {
    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn domain(&self) -> usize {
        self.domain
    }
    pub fn parent(&self) -> Option<NodeId> {
        self.parent
    }
    pub fn children(&self) -> &[NodeId] {
        &self.children
    }
    pub fn cpt(&self) -> Option<&CondMatrix> {
        self.cpt.as_ref()
    }
    pub fn prior(&self) -> Option<&[f64]> {
        self.prior.as_deref()
    }
    pub fn evidence(&self) -> Option<&Evidence> {
        self.evidence.as_ref()
    }
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CausalTree {
    nodes: Vec<Node>,
    root: NodeId,
    by_name: HashMap<String, NodeId>,
    preorder: Vec<NodeId>,
    depths: Vec<usize>,
}

impl CausalTree {
    /// Validates raw nodes. `nodes[i].children` must already be in the
    /// intended left-to-right order and consistent with `parent`.
    pub(crate) fn assemble(nodes: Vec<Node>) -> Result<CausalTree> {
        let mut by_name = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if by_name.insert(n.name.clone(), NodeId(i)).is_some() {
                return Err(Error::DuplicateId(n.name.clone()));
            }
        }
        let roots: Vec<usize> = (0..nodes.len())
            .filter(|&i| nodes[i].parent.is_none())
            .collect();
        let root = match roots.as_slice() {
            [] => return Err(Error::MissingRoot),
            [r] => NodeId(*r),
            many => {
                return Err(Error::MultipleRoots(
                    many.iter().map(|&i| nodes[i].name.clone()).collect(),
                ))
            }
        };

        let mut preorder = Vec::with_capacity(nodes.len());
        let mut depths = vec![usize::MAX; nodes.len()];
        let mut stack = vec![(root, 0usize)];
        while let Some((id, d)) = stack.pop() {
            if depths[id.0] != usize::MAX {
                return Err(Error::Cycle(nodes[id.0].name.clone()));
            }
            depths[id.0] = d;
            preorder.push(id);
            for &c in nodes[id.0].children.iter().rev() {
                stack.push((c, d + 1));
            }
        }
        if let Some(i) = depths.iter().position(|&d| d == usize::MAX) {
            return Err(Error::Cycle(nodes[i].name.clone()));
        }

        let tree = CausalTree {
            nodes,
            root,
            by_name,
            preorder,
            depths,
        };
        for id in tree.ids() {
            tree.validate_node(id)?;
        }
        Ok(tree)
    }

    fn validate_node(&self, id: NodeId) -> Result<()> {
        let n = self.node(id);
        let name = n.name.as_str();
        if n.domain == 0 {
            return Err(Error::DimensionMismatch {
                node: name.to_string(),
                expected: 1,
                found: 0,
            });
        }
        match n.parent {
            None => {
                if n.cpt.is_some() {
                    return Err(Error::UnexpectedField {
                        node: name.to_string(),
                        field: "cpt",
                    });
                }
                let prior = n.prior.as_ref().ok_or_else(|| Error::MissingField {
                    node: name.to_string(),
                    field: "prior",
                })?;
                if prior.len() != n.domain {
                    return Err(Error::DimensionMismatch {
                        node: name.to_string(),
                        expected: n.domain,
                        found: prior.len(),
                    });
                }
                if prior.iter().any(|x| !x.is_finite() || *x < 0.0) {
                    return Err(Error::InvalidProbability(name.to_string()));
                }
                let s: f64 = prior.iter().sum();
                if (s - 1.0).abs() > STOCHASTIC_TOL {
                    return Err(Error::RowNotStochastic {
                        node: name.to_string(),
                        row: 0,
                        sum: s,
                    });
                }
            }
            Some(p) => {
                if n.prior.is_some() {
                    return Err(Error::UnexpectedField {
                        node: name.to_string(),
                        field: "prior",
                    });
                }
                let cpt = n.cpt.as_ref().ok_or_else(|| Error::MissingField {
                    node: name.to_string(),
                    field: "cpt",
                })?;
                let pd = self.node(p).domain;
                if cpt.rows() != pd {
                    return Err(Error::DimensionMismatch {
                        node: name.to_string(),
                        expected: pd,
                        found: cpt.rows(),
                    });
                }
                if cpt.cols() != n.domain {
                    return Err(Error::DimensionMismatch {
                        node: name.to_string(),
                        expected: n.domain,
                        found: cpt.cols(),
                    });
                }
                if !cpt.all_finite_nonneg() {
                    return Err(Error::InvalidProbability(name.to_string()));
                }
                if let Some((row, sum)) = cpt.non_stochastic_row(STOCHASTIC_TOL) {
                    return Err(Error::RowNotStochastic {
                        node: name.to_string(),
                        row,
                        sum,
                    });
                }
            }
        }
        match (&n.evidence, n.children.is_empty()) {
            (Some(ev), true) => ev.validate(name, n.domain),
            (None, true) => Err(Error::LeafWithoutEvidence(name.to_string())),
            (Some(_), false) => Err(Error::UnexpectedField {
                node: name.to_string(),
                field: "evidence",
            }),
            (None, false) => Ok(()),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn get(&self, id: NodeId) -> Result<&Node> {
        self.nodes
            .get(id.0)
            .ok_or_else(|| Error::UnknownNode(id.to_string()))
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node_id(&self, name: &str) -> Result<NodeId> {
        self.by_name
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownNode(name.to_string()))
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.nodes[id.0].name
    }

    /// Parents before children, children in left-to-right order.
    pub fn preorder(&self) -> &[NodeId] {
        &self.preorder
    }

    /// Leaves in left-to-right frontier order.
    pub fn leaves(&self) -> Vec<NodeId> {
        self.preorder
            .iter()
            .copied()
            .filter(|&id| self.node(id).is_leaf())
            .collect()
    }

    /// Number of edges from the root to `id`.
    pub fn depth_of(&self, id: NodeId) -> usize {
        self.depths[id.0]
    }

    /// Tree height `D`.
    pub fn depth(&self) -> usize {
        self.depths.iter().copied().max().unwrap_or(0)
    }

    /// Largest domain size `k`.
    pub fn k_max(&self) -> usize {
        self.nodes.iter().map(|n| n.domain).max().unwrap_or(0)
    }

    pub fn internal_count(&self) -> usize {
        self.nodes.iter().filter(|n| !n.is_leaf()).count()
    }

    /// Every internal node has exactly two children.
    pub fn is_complete_binary(&self) -> bool {
        self.nodes
            .iter()
            .all(|n| n.children.is_empty() || n.children.len() == 2)
    }

    pub fn evidence(&self, id: NodeId) -> Option<&Evidence> {
        self.nodes[id.0].evidence.as_ref()
    }

    /// Replaces the likelihood at leaf `id`.
    pub fn set_evidence(&mut self, id: NodeId, evidence: Evidence) -> Result<()> {
        let n = self.get(id)?;
        if !n.is_leaf() {
            return Err(Error::NotALeaf(n.name.clone()));
        }
        evidence.validate(&n.name, n.domain)?;
        self.nodes[id.0].evidence = Some(evidence);
        Ok(())
    }
}
