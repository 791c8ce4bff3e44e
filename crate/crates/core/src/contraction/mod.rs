//! Tree contraction for logarithmic-time evidence updates and queries.
//!
//! The source tree `T₀` is contracted by repeated rounds of RAKE operations.
//! Each round rakes every other non-extreme leaf, in left-to-right order, and
//! the process stops when only the root and the two extreme leaves remain.
//! Every internal node `x` of a contracted tree `Tᵢ` satisfies
//!
//! ```text
//! λ(x) = Aᵢ(x) · λ(y) * Bᵢ(x) · λ(z)
//! π(x) = Dᵢ(x) · (π(u) * Cᵢ(x) · λ(v))
//! ```
//!
//! where `y`, `z` are its children, `u` its parent and `v` its sibling. Only
//! `A` and `B` are stored ("slots"); `C` and `D` are read off the parent's
//! slots. Raking leaf `e` with parent `x` and grandparent `u` replaces the
//! slot of `u` that pointed at `x` by `outer · Diag_{leaf·λ(e)} · inner`,
//! where `outer` is that old slot, `leaf` is `x`'s slot towards `e` and
//! `inner` is `x`'s slot towards its surviving child. The transpose of the
//! new slot is exactly the rewritten `D` of the surviving child, so π
//! equations need no separate storage.
//!
//! Each slot is an operand of at most one later rake, so an evidence change
//! walks a single chain of slots ("consumers") up the levels.

mod coeff;
mod query;

use std::collections::HashMap;
use std::fmt;

pub use coeff::Coefficient;
pub use query::PiLambdaTriple;

use crate::counters::{OpCounters, OpRecorder};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{CausalTree, Evidence, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }

    fn index(self) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SlotId(pub usize);

/// How a stored coefficient is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotDef {
    /// Conditional matrix of the edge into `child` in `T₀`.
    Edge { child: NodeId },
    /// `outer · Diag_{leaf_coeff · λ(leaf)} · inner`.
    Rake {
        outer: SlotId,
        leaf_coeff: SlotId,
        leaf: NodeId,
        inner: SlotId,
    },
}

/// One stored coefficient matrix (an `A` or `B` of some level).
#[derive(Debug, Clone)]
pub struct Slot<C> {
    pub owner: NodeId,
    /// `Left` for an `A` coefficient, `Right` for a `B` coefficient.
    pub side: Side,
    /// Level of the equations it belongs to.
    pub level: usize,
    /// Rewrites of the same (owner, side) within one round, 0-based.
    pub version: usize,
    pub coeff: C,
    pub def: SlotDef,
    /// The single later rake that reads this slot, if any.
    pub consumer: Option<SlotId>,
}

/// Human-readable slot name such as `B1(x3)`; repeated rewrites within a
/// round carry a suffix, `B1.1(x3)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotLabel {
    pub owner: String,
    pub side: Side,
    pub level: usize,
    pub version: usize,
}

impl fmt::Display for SlotLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let letter = match self.side {
            Side::Left => 'A',
            Side::Right => 'B',
        };
        if self.version == 0 {
            write!(f, "{letter}{}({})", self.level, self.owner)
        } else {
            write!(f, "{letter}{}.{}({})", self.level, self.version, self.owner)
        }
    }
}

/// Link structure of one node inside a contracted tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelNode {
    pub parent: Option<(NodeId, Side)>,
    /// Children with the slot of this node that points at each of them.
    pub children: Option<[(NodeId, SlotId); 2]>,
}

impl LevelNode {
    pub fn child(&self, side: Side) -> (NodeId, SlotId) {
        self.children.expect("internal node")[side.index()]
    }
}

/// A contracted tree `Tᵢ`: the state at the start of round `i`.
#[derive(Debug, Clone, Default)]
pub struct Level {
    nodes: HashMap<NodeId, LevelNode>,
    leaves: Vec<NodeId>,
}

impl Level {
    pub fn contains(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn node(&self, id: NodeId) -> Option<&LevelNode> {
        self.nodes.get(&id)
    }

    /// Leaves in left-to-right order.
    pub fn leaves(&self) -> &[NodeId] {
        &self.leaves
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn at(&self, id: NodeId) -> &LevelNode {
        &self.nodes[&id]
    }
}

/// The node roles of one RAKE.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RakeEvent {
    pub level: usize,
    /// Raked leaf `e`.
    pub leaf: NodeId,
    /// Its parent `x`, removed together with it.
    pub parent: NodeId,
    /// Other child `z` of `x`, spliced under `u`.
    pub survivor: NodeId,
    /// Sibling `v` of `x`.
    pub sibling: NodeId,
    /// Grandparent `u`.
    pub grandparent: NodeId,
    /// Side of `e` under `x`.
    pub leaf_side: Side,
    /// Side of `x` (and afterwards `z`) under `u`.
    pub parent_side: Side,
    pub new_slot: SlotId,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Fate {
    /// Round in which the node was raked away (as leaf or as parent).
    removed_in: Option<usize>,
}

/// Result of an evidence update: the slots recomputed, in order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UpdateReport {
    pub recomputed: Vec<SlotId>,
}

/// Incremental builder that performs RAKE operations on a working copy.
#[derive(Debug)]
pub struct Contractor<C> {
    tree: CausalTree,
    slots: Vec<Slot<C>>,
    parent: Vec<Option<(NodeId, Side)>>,
    children: Vec<Option<[(NodeId, SlotId); 2]>>,
    alive: Vec<bool>,
    fate: Vec<Fate>,
    leaf_consumer: Vec<Option<SlotId>>,
    rake_log: Vec<RakeEvent>,
    levels: Vec<Level>,
    round: usize,
    round_versions: HashMap<(NodeId, Side), usize>,
    rec: OpRecorder,
}

impl<C: Coefficient> Contractor<C> {
    /// Starts from `T₀`. `edge_coeffs[c]` is the coefficient of the edge into
    /// node `c` (ignored for the root).
    pub fn new(tree: CausalTree, edge_coeffs: Vec<Option<C>>) -> Result<Self> {
        if tree.len() < 3 {
            return Err(Error::TreeTooSmall(tree.len()));
        }
        if !tree.is_complete_binary() {
            return Err(Error::ConstructionError(
                "tree is not complete binary; normalize it first".into(),
            ));
        }
        let n = tree.len();
        let mut edge_coeffs = edge_coeffs;
        edge_coeffs.resize(n, None);
        let mut slots = Vec::with_capacity(2 * n);
        let mut parent = vec![None; n];
        let mut children = vec![None; n];
        for &x in tree.preorder() {
            let node = tree.node(x);
            if node.is_leaf() {
                continue;
            }
            let mut pair = [(NodeId(0), SlotId(0)); 2];
            for (i, &c) in node.children().iter().enumerate() {
                let side = if i == 0 { Side::Left } else { Side::Right };
                let coeff = edge_coeffs[c.0].take().ok_or_else(|| {
                    Error::ConstructionError(format!("no coefficient for edge into `{}`", tree.name(c)))
                })?;
                let (pd, cd) = (node.domain(), tree.node(c).domain());
                if coeff.rows() != pd || coeff.cols() != cd {
                    return Err(Error::DimensionMismatch {
                        node: tree.name(c).to_string(),
                        expected: pd * cd,
                        found: coeff.rows() * coeff.cols(),
                    });
                }
                let id = SlotId(slots.len());
                slots.push(Slot {
                    owner: x,
                    side,
                    level: 0,
                    version: 0,
                    coeff,
                    def: SlotDef::Edge { child: c },
                    consumer: None,
                });
                pair[i] = (c, id);
                parent[c.0] = Some((x, side));
            }
            children[x.0] = Some(pair);
        }
        let mut c = Contractor {
            leaf_consumer: vec![None; n],
            fate: vec![Fate::default(); n],
            alive: vec![true; n],
            tree,
            slots,
            parent,
            children,
            rake_log: Vec::new(),
            levels: Vec::new(),
            round: 0,
            round_versions: HashMap::new(),
            rec: OpRecorder::new(),
        };
        c.levels.push(c.snapshot());
        Ok(c)
    }

    /// Current leaves, left to right.
    pub fn frontier(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![self.tree.root()];
        while let Some(x) = stack.pop() {
            match self.children[x.0] {
                None => out.push(x),
                Some([(l, _), (r, _)]) => {
                    stack.push(r);
                    stack.push(l);
                }
            }
        }
        out
    }

    fn snapshot(&self) -> Level {
        let mut level = Level::default();
        let mut stack = vec![self.tree.root()];
        while let Some(x) = stack.pop() {
            level.nodes.insert(
                x,
                LevelNode {
                    parent: self.parent[x.0],
                    children: self.children[x.0],
                },
            );
            match self.children[x.0] {
                None => level.leaves.push(x),
                Some([(l, _), (r, _)]) => {
                    stack.push(r);
                    stack.push(l);
                }
            }
        }
        level
    }

    fn is_extreme(&self, mut x: NodeId) -> bool {
        let (mut all_left, mut all_right) = (true, true);
        while let Some((p, side)) = self.parent[x.0] {
            all_left &= side == Side::Left;
            all_right &= side == Side::Right;
            x = p;
        }
        all_left || all_right
    }

    /// Removes leaf `e` and its parent, folding their equations into the
    /// grandparent's coefficient.
    pub fn rake(&mut self, e: NodeId) -> Result<RakeEvent> {
        let name = || self.tree.name(e).to_string();
        if e.0 >= self.alive.len() || !self.alive[e.0] {
            return Err(Error::UnknownNode(e.to_string()));
        }
        if self.children[e.0].is_some() {
            return Err(Error::NotRakeable(name(), "not a leaf"));
        }
        let Some((x, _)) = self.parent[e.0] else {
            return Err(Error::NotRakeable(name(), "leaf is the root"));
        };
        if self.parent[x.0].is_none() {
            return Err(Error::NotRakeable(name(), "parent is the root"));
        }
        if self.is_extreme(e) {
            return Err(Error::NotRakeable(name(), "extreme leaf"));
        }
        Ok(self.rake_unchecked(e))
    }

    fn rake_unchecked(&mut self, e: NodeId) -> RakeEvent {
        let (x, leaf_side) = self.parent[e.0].expect("leaf has parent");
        let (u, parent_side) = self.parent[x.0].expect("parent is not root");
        let x_children = self.children[x.0].expect("x internal");
        let (_, leaf_coeff) = x_children[leaf_side.index()];
        let (z, inner) = x_children[leaf_side.other().index()];
        let u_children = self.children[u.0].expect("u internal");
        let (_, outer) = u_children[parent_side.index()];
        let (v, _) = u_children[parent_side.other().index()];

        let lambda = self.tree.evidence(e).expect("leaf evidence").likelihood().to_vec();
        let coeff = C::rake(
            &self.slots[outer.0].coeff,
            &self.slots[leaf_coeff.0].coeff,
            &lambda,
            &self.slots[inner.0].coeff,
            &self.rec,
        );
        let version = self.round_versions.entry((u, parent_side)).or_insert(0);
        let new_slot = SlotId(self.slots.len());
        self.slots.push(Slot {
            owner: u,
            side: parent_side,
            level: self.round + 1,
            version: *version,
            coeff,
            def: SlotDef::Rake {
                outer,
                leaf_coeff,
                leaf: e,
                inner,
            },
            consumer: None,
        });
        *version += 1;
        for s in [outer, leaf_coeff, inner] {
            debug_assert!(self.slots[s.0].consumer.is_none(), "slot consumed twice");
            self.slots[s.0].consumer = Some(new_slot);
        }
        self.leaf_consumer[e.0] = Some(new_slot);

        let mut uc = u_children;
        uc[parent_side.index()] = (z, new_slot);
        self.children[u.0] = Some(uc);
        self.parent[z.0] = Some((u, parent_side));
        for gone in [e, x] {
            self.alive[gone.0] = false;
            self.parent[gone.0] = None;
            self.children[gone.0] = None;
            self.fate[gone.0].removed_in = Some(self.round);
        }

        let event = RakeEvent {
            level: self.round,
            leaf: e,
            parent: x,
            survivor: z,
            sibling: v,
            grandparent: u,
            leaf_side,
            parent_side,
            new_slot,
        };
        self.rake_log.push(event);
        event
    }

    /// One CONTRACT round. Returns the number of leaves raked.
    pub fn contract_round(&mut self) -> usize {
        let leaves = self.frontier();
        let m = leaves.len();
        if m <= 2 {
            return 0;
        }
        let targets: Vec<NodeId> = leaves[1..m - 1].iter().step_by(2).copied().collect();
        for &e in &targets {
            self.rake_unchecked(e);
        }
        self.round += 1;
        self.round_versions.clear();
        self.levels.push(self.snapshot());
        targets.len()
    }

    /// Contracts until the three-node tree remains.
    pub fn finish(mut self) -> ContractionIndex<C> {
        while self.contract_round() > 0 {}
        let counters = self.rec.snapshot();
        ContractionIndex {
            tree: self.tree,
            slots: self.slots,
            levels: self.levels,
            fate: self.fate,
            leaf_consumer: self.leaf_consumer,
            rake_log: self.rake_log,
            preprocessing: counters,
            rec: self.rec,
        }
    }
}

/// Contracted levels `T₀ … T_final` of a normalized causal tree.
#[derive(Debug, Clone)]
pub struct ContractionIndex<C = Matrix> {
    tree: CausalTree,
    slots: Vec<Slot<C>>,
    levels: Vec<Level>,
    fate: Vec<Fate>,
    leaf_consumer: Vec<Option<SlotId>>,
    rake_log: Vec<RakeEvent>,
    preprocessing: OpCounters,
    rec: OpRecorder,
}

/// Builds the dense contraction index of a complete binary causal tree.
pub fn contract(tree: &CausalTree) -> Result<ContractionIndex<Matrix>> {
    let coeffs = tree.nodes().iter().map(|n| n.cpt().cloned()).collect();
    Ok(Contractor::new(tree.clone(), coeffs)?.finish())
}

impl<C: Coefficient> ContractionIndex<C> {
    /// Builds an index whose `T₀` coefficients are given per edge.
    pub fn with_coefficients(tree: CausalTree, edge_coeffs: Vec<Option<C>>) -> Result<Self> {
        Ok(Contractor::new(tree, edge_coeffs)?.finish())
    }

    pub fn tree(&self) -> &CausalTree {
        &self.tree
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    /// Index of the final (three-node) level.
    pub fn final_level(&self) -> usize {
        self.levels.len() - 1
    }

    /// Number of CONTRACT rounds performed.
    pub fn rounds(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn slots(&self) -> &[Slot<C>] {
        &self.slots
    }

    pub fn slot(&self, id: SlotId) -> &Slot<C> {
        &self.slots[id.0]
    }

    pub fn rake_log(&self) -> &[RakeEvent] {
        &self.rake_log
    }

    /// Highest level at which `x` has equations.
    pub fn ind(&self, x: NodeId) -> Result<usize> {
        self.tree.get(x)?;
        Ok(self.ind_unchecked(x))
    }

    fn ind_unchecked(&self, x: NodeId) -> usize {
        self.fate[x.0].removed_in.unwrap_or(self.final_level())
    }

    fn removed_in(&self, x: NodeId) -> Option<usize> {
        self.fate[x.0].removed_in
    }

    /// Coefficient matrices stored across all levels.
    pub fn stored_matrices(&self) -> usize {
        self.slots.len()
    }

    /// Coefficient matrices of `T₀` alone.
    pub fn base_matrices(&self) -> usize {
        self.slots
            .iter()
            .filter(|s| matches!(s.def, SlotDef::Edge { .. }))
            .count()
    }

    /// The slot whose definition reads the likelihood of `leaf`.
    pub fn leaf_consumer(&self, leaf: NodeId) -> Option<SlotId> {
        self.leaf_consumer.get(leaf.0).copied().flatten()
    }

    /// Slots from `start` along consumer links, `start` included.
    pub fn consumer_chain(&self, start: SlotId) -> Vec<SlotId> {
        let mut out = vec![start];
        while let Some(next) = self.slots[out.last().expect("nonempty").0].consumer {
            out.push(next);
        }
        out
    }

    pub fn label(&self, id: SlotId) -> SlotLabel {
        let s = &self.slots[id.0];
        SlotLabel {
            owner: self.tree.name(s.owner).to_string(),
            side: s.side,
            level: s.level,
            version: s.version,
        }
    }

    pub fn counters(&self) -> OpCounters {
        self.rec.snapshot()
    }

    pub fn shape_counts(&self) -> crate::counters::ShapeCounts {
        self.rec.shape_counts()
    }

    /// Work spent building the index.
    pub fn preprocessing_counters(&self) -> OpCounters {
        self.preprocessing
    }

    pub(crate) fn evidence_of(&self, leaf: NodeId) -> &[f64] {
        self.tree.evidence(leaf).expect("leaf evidence").likelihood()
    }

    /// Replaces the likelihood of `leaf` and recomputes the slots on its
    /// consumer chain, bottom level first. λ and π values are never cached.
    pub fn update_evidence(&mut self, leaf: NodeId, evidence: Evidence) -> Result<UpdateReport> {
        self.tree.set_evidence(leaf, evidence)?;
        let mut report = UpdateReport::default();
        let mut cur = self.leaf_consumer[leaf.0];
        while let Some(s) = cur {
            self.recompute(s);
            report.recomputed.push(s);
            cur = self.slots[s.0].consumer;
        }
        Ok(report)
    }

    fn recompute(&mut self, s: SlotId) {
        let SlotDef::Rake {
            outer,
            leaf_coeff,
            leaf,
            inner,
        } = self.slots[s.0].def
        else {
            unreachable!("edge slots never sit on a consumer chain");
        };
        let coeff = C::rake(
            &self.slots[outer.0].coeff,
            &self.slots[leaf_coeff.0].coeff,
            self.evidence_of(leaf),
            &self.slots[inner.0].coeff,
            &self.rec,
        );
        self.slots[s.0].coeff = coeff;
    }

    /// Corrupts the root's final left coefficient without touching its
    /// consumers. Only meant for testing the verification harness.
    #[doc(hidden)]
    pub fn inject_fault(&mut self) {
        let root = self.tree.root();
        let (_, s) = self.levels[self.final_level()].at(root).child(Side::Left);
        self.slots[s.0].coeff.perturb_first(0.5);
    }
}
