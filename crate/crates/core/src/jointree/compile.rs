//! Join tree to causal tree over clique variables.

use super::cliques::{build_join_tree, extract_cliques, Clique, JoinTree};
use super::factored::FactoredMatrix;
use super::polytree::{prior_marginals, Polytree};
use crate::contraction::Coefficient;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{normalize_tree, CausalTree, Evidence, Node, NodeId};

/// Default cap on clique state counts.
pub const DEFAULT_K_CAP: usize = 4096;

#[derive(Debug, Clone, Copy)]
pub struct CompileOptions {
    /// Variable whose clique becomes the root; the first parentless
    /// variable when `None`.
    pub root: Option<usize>,
    pub k_cap: usize,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            root: None,
            k_cap: DEFAULT_K_CAP,
        }
    }
}

/// A polytree compiled into a complete binary causal tree.
///
/// Node `v` is the clique of variable `v` and node `n + v` its evidence
/// leaf; nodes added by normalization follow.
#[derive(Debug, Clone)]
pub struct CompiledPolytree {
    pub join_tree: JoinTree,
    pub marginals: Vec<Vec<f64>>,
    pub tree: CausalTree,
    /// Factored edge matrix into each node (`None` at the root).
    pub factored: Vec<Option<FactoredMatrix>>,
}

impl CompiledPolytree {
    pub fn clique_node(&self, var: usize) -> NodeId {
        NodeId(var)
    }

    pub fn evidence_leaf(&self, var: usize) -> NodeId {
        NodeId(self.join_tree.cliques.len() + var)
    }

    pub fn clique(&self, var: usize) -> &Clique {
        &self.join_tree.cliques[var]
    }
}

/// `p(C)` of a clique's family with its parents drawn from their marginals,
/// optionally leaving out one parent (conditioned on) or dividing by the
/// child's own marginal.
fn family_weight(pt: &Polytree, c: &Clique, state: usize, marg: &[Vec<f64>], skip: Option<usize>) -> f64 {
    let v = pt.var(c.var);
    let mut row = 0;
    let mut w = 1.0;
    for (pos, &p) in c.members.iter().enumerate().skip(1) {
        let x = c.coord(state, pos);
        row = row * c.sizes[pos] + x;
        if Some(p) != skip {
            w *= marg[p][x];
        }
    }
    w * v.table.get(row, c.coord(state, 0))
}

/// Builds the clique causal tree with factored conditionals.
pub fn compile_join_tree(jt: &JoinTree, pt: &Polytree, marginals: &[Vec<f64>], k_cap: usize) -> Result<CompiledPolytree> {
    let n = pt.len();
    for c in &jt.cliques {
        if c.states > k_cap {
            return Err(Error::DimensionOverflow(pt.var(c.var).name.clone(), c.states, k_cap));
        }
    }
    let mut factored: Vec<Option<FactoredMatrix>> = vec![None; 2 * n];
    let mut nodes: Vec<Node> = Vec::with_capacity(2 * n);

    for (v, c) in jt.cliques.iter().enumerate() {
        let (edge, prior) = match jt.parent[v] {
            None => {
                let prior = (0..c.states).map(|s| family_weight(pt, c, s, marginals, None)).collect();
                (None, Some(prior))
            }
            Some(e) => {
                let up = &jt.cliques[e.parent];
                let s = e.separator;
                let up_pos = up.position(s).expect("separator in parent clique");
                let pos = c.position(s).expect("separator in child clique");
                let l = pt.var(s).domain;
                let divide = s == c.var;
                if divide && marginals[s].iter().any(|&m| m <= 0.0) {
                    return Err(Error::ZeroMarginalDivisor(pt.var(s).name.clone()));
                }
                let skip = (!divide).then_some(s);
                let mut right = Matrix::zeros(l, c.states);
                for t in 0..c.states {
                    let x = c.coord(t, pos);
                    let mut w = family_weight(pt, c, t, marginals, skip);
                    if divide {
                        w /= marginals[s][x];
                    }
                    right.set(x, t, w);
                }
                let select = (0..up.states).map(|t| up.coord(t, up_pos)).collect();
                (Some(FactoredMatrix::new(select, right)?), None)
            }
        };
        let mut children = vec![NodeId(n + v)];
        children.extend(jt.children[v].iter().map(|&w| NodeId(w)));
        nodes.push(Node {
            name: format!("C[{}]", pt.var(v).name),
            domain: c.states,
            parent: jt.parent[v].map(|e| NodeId(e.parent)),
            children,
            cpt: edge.as_ref().map(Coefficient::materialize),
            prior,
            evidence: None,
        });
        factored[v] = edge;
    }
    for (v, c) in jt.cliques.iter().enumerate() {
        let k = pt.var(v).domain;
        let ind = FactoredMatrix::new((0..c.states).map(|t| c.coord(t, 0)).collect(), Matrix::identity(k))?;
        nodes.push(Node {
            name: format!("E[{}]", pt.var(v).name),
            domain: k,
            parent: Some(NodeId(v)),
            children: Vec::new(),
            cpt: Some(ind.materialize()),
            prior: None,
            evidence: Some(Evidence::uniform(k)),
        });
        factored[n + v] = Some(ind);
    }

    let raw = CausalTree::assemble(nodes)?;
    let (tree, _) = normalize_tree(&raw)?;
    for id in tree.ids().skip(2 * n) {
        let node = tree.node(id);
        let parent_domain = tree.node(node.parent().expect("inserted nodes have parents")).domain();
        factored.push(Some(if node.is_leaf() {
            // unit leaf: every parent state maps to the single column
            FactoredMatrix::new(vec![0; parent_domain], Matrix::filled(1, 1, 1.0))?
        } else {
            FactoredMatrix::identity(node.domain())
        }));
    }
    Ok(CompiledPolytree {
        join_tree: jt.clone(),
        marginals: marginals.to_vec(),
        tree,
        factored,
    })
}

/// Cliques, join tree, prior marginals and compilation in one call.
pub fn compile_polytree(pt: &Polytree, opts: CompileOptions) -> Result<CompiledPolytree> {
    let (cliques, _) = extract_cliques(pt)?;
    let jt = build_join_tree(cliques, pt, opts.root)?;
    let marginals = prior_marginals(pt);
    compile_join_tree(&jt, pt, &marginals, opts.k_cap)
}
