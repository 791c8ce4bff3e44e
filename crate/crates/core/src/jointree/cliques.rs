//! Families as cliques, the moral-graph check and the join tree itself.

use std::collections::{BTreeSet, VecDeque};

use super::polytree::Polytree;
use crate::error::{Error, Result};

/// The family `{v} ∪ parents(v)` of one variable.
///
/// Members are ordered child first, then parents in declaration order;
/// states are mixed-radix with the first member most significant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clique {
    pub var: usize,
    pub members: Vec<usize>,
    pub sizes: Vec<usize>,
    pub strides: Vec<usize>,
    pub states: usize,
}

impl Clique {
    fn family(pt: &Polytree, v: usize) -> Clique {
        let members: Vec<usize> = std::iter::once(v).chain(pt.var(v).parents.iter().copied()).collect();
        let sizes: Vec<usize> = members.iter().map(|&m| pt.var(m).domain).collect();
        let mut strides = vec![1; sizes.len()];
        for i in (0..sizes.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * sizes[i + 1];
        }
        Clique {
            var: v,
            states: sizes.iter().product(),
            members,
            sizes,
            strides,
        }
    }

    pub fn position(&self, var: usize) -> Option<usize> {
        self.members.iter().position(|&m| m == var)
    }

    /// Value of member `pos` in clique state `state`.
    pub fn coord(&self, state: usize, pos: usize) -> usize {
        state / self.strides[pos] % self.sizes[pos]
    }

    /// Sums a distribution over clique states onto one member variable.
    pub fn marginalize(&self, dist: &[f64], var: usize) -> Option<Vec<f64>> {
        let pos = self.position(var)?;
        let mut out = vec![0.0; self.sizes[pos]];
        for (s, p) in dist.iter().enumerate() {
            out[self.coord(s, pos)] += p;
        }
        Some(out)
    }

    pub fn member_set(&self) -> BTreeSet<usize> {
        self.members.iter().copied().collect()
    }
}

/// Result of checking the moral graph against the family cliques.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MoralCheck {
    pub chordal: bool,
    /// Maximal cliques of the moral graph, each sorted.
    pub maximal_cliques: Vec<Vec<usize>>,
    /// Variables whose family is strictly inside another family; only
    /// parentless variables with a single-parent child end up here.
    pub non_maximal_families: Vec<usize>,
}

/// Undirected graph with every pair of co-parents married.
pub fn moral_graph(pt: &Polytree) -> Vec<BTreeSet<usize>> {
    let mut adj = vec![BTreeSet::new(); pt.len()];
    for (w, v) in pt.vars().iter().enumerate() {
        for (i, &a) in v.parents.iter().enumerate() {
            adj[a].insert(w);
            adj[w].insert(a);
            for &b in &v.parents[i + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
    }
    adj
}

/// Maximum cardinality search order; its reverse is a perfect elimination
/// order iff the graph is chordal.
fn mcs_order(adj: &[BTreeSet<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut weight = vec![0usize; n];
    let mut done = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| !done[v])
            .max_by_key(|&v| (weight[v], std::cmp::Reverse(v)))
            .expect("vertex left");
        done[v] = true;
        order.push(v);
        for &u in &adj[v] {
            if !done[u] {
                weight[u] += 1;
            }
        }
    }
    order
}

/// Chordality test plus the maximal cliques when chordal.
pub fn check_chordal(adj: &[BTreeSet<usize>]) -> (bool, Vec<Vec<usize>>) {
    let order = mcs_order(adj);
    let mut pos = vec![0; adj.len()];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let mut candidates: Vec<BTreeSet<usize>> = Vec::new();
    for &v in &order {
        let earlier: Vec<usize> = adj[v].iter().copied().filter(|&u| pos[u] < pos[v]).collect();
        if let Some(&last) = earlier.iter().max_by_key(|&&u| pos[u]) {
            if earlier.iter().any(|&u| u != last && !adj[last].contains(&u)) {
                return (false, Vec::new());
            }
        }
        let mut c: BTreeSet<usize> = earlier.into_iter().collect();
        c.insert(v);
        candidates.push(c);
    }
    let maximal = candidates
        .iter()
        .enumerate()
        .filter(|(i, c)| {
            !candidates
                .iter()
                .enumerate()
                .any(|(j, d)| j != *i && c.is_subset(d) && (c.len() < d.len() || j < *i))
        })
        .map(|(_, c)| c.iter().copied().collect())
        .collect();
    (true, maximal)
}

/// One clique per variable, verified against the moral graph: it must be
/// chordal and each of its maximal cliques must be some family.
pub fn extract_cliques(pt: &Polytree) -> Result<(Vec<Clique>, MoralCheck)> {
    let cliques: Vec<Clique> = (0..pt.len()).map(|v| Clique::family(pt, v)).collect();
    let adj = moral_graph(pt);
    for c in &cliques {
        for (i, &a) in c.members.iter().enumerate() {
            if c.members[i + 1..].iter().any(|b| !adj[a].contains(b)) {
                return Err(Error::ConstructionError(format!("family of `{}` is not a clique", pt.var(c.var).name)));
            }
        }
    }
    let (chordal, mut maximal) = check_chordal(&adj);
    if !chordal {
        return Err(Error::ConstructionError("moral graph is not chordal".into()));
    }
    maximal.sort();
    let families: Vec<BTreeSet<usize>> = cliques.iter().map(Clique::member_set).collect();
    for m in &maximal {
        let m: BTreeSet<usize> = m.iter().copied().collect();
        if !families.contains(&m) {
            return Err(Error::ConstructionError(format!("maximal clique {m:?} is not a family")));
        }
    }
    let non_maximal_families = (0..pt.len())
        .filter(|&v| {
            families
                .iter()
                .any(|f| f.len() > families[v].len() && families[v].is_subset(f))
        })
        .collect();
    Ok((
        cliques,
        MoralCheck {
            chordal,
            maximal_cliques: maximal,
            non_maximal_families,
        },
    ))
}

/// Directed join-tree edge from `parent` clique to `child` clique.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JoinEdge {
    pub parent: usize,
    pub child: usize,
    pub separator: usize,
}

/// Clique tree isomorphic to the polytree's skeleton, rooted at one clique.
/// Clique `i` is the family of variable `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinTree {
    pub cliques: Vec<Clique>,
    pub root: usize,
    /// Edges in breadth-first order from the root.
    pub edges: Vec<JoinEdge>,
    /// Incoming edge of each clique (`None` at the root).
    pub parent: Vec<Option<JoinEdge>>,
    /// Child cliques in deterministic order.
    pub children: Vec<Vec<usize>>,
}

impl JoinTree {
    /// Largest separator size `c`.
    pub fn max_separator(&self) -> usize {
        self.edges
            .iter()
            .map(|e| {
                self.cliques[e.parent]
                    .member_set()
                    .intersection(&self.cliques[e.child].member_set())
                    .count()
            })
            .max()
            .unwrap_or(0)
    }

    /// For every variable, the cliques containing it span a connected subtree.
    pub fn running_intersection(&self) -> bool {
        let n = self.cliques.len();
        (0..n).all(|v| {
            let holds: Vec<bool> = self.cliques.iter().map(|c| c.position(v).is_some()).collect();
            let nodes = holds.iter().filter(|&&h| h).count();
            let links = self.edges.iter().filter(|e| holds[e.parent] && holds[e.child]).count();
            nodes == links + 1
        })
    }
}

/// One edge `C_v -- C_w` per polytree edge `v → w`, separator `{v}`, rooted at
/// `root` (default: the first parentless variable).
pub fn build_join_tree(cliques: Vec<Clique>, pt: &Polytree, root: Option<usize>) -> Result<JoinTree> {
    let n = pt.len();
    if cliques.len() != n {
        return Err(Error::ConstructionError("one clique per variable expected".into()));
    }
    let root = match root {
        Some(r) if r < n => r,
        Some(r) => return Err(Error::UnknownVariable(format!("#{r}"))),
        None => (0..n).find(|&v| pt.var(v).parents.is_empty()).expect("a polytree has a source"),
    };
    // neighbour x of clique y carries separator = the parent end of the edge
    let neighbours = |x: usize| {
        pt.children(x)
            .iter()
            .map(move |&c| (c, x))
            .chain(pt.var(x).parents.iter().map(move |&p| (p, p)))
    };
    let mut parent: Vec<Option<JoinEdge>> = vec![None; n];
    let mut children = vec![Vec::new(); n];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut seen = vec![false; n];
    seen[root] = true;
    let mut queue = VecDeque::from([root]);
    while let Some(x) = queue.pop_front() {
        for (y, sep) in neighbours(x) {
            if seen[y] {
                continue;
            }
            seen[y] = true;
            let e = JoinEdge { parent: x, child: y, separator: sep };
            parent[y] = Some(e);
            children[x].push(y);
            edges.push(e);
            queue.push_back(y);
        }
    }
    if edges.len() + 1 != n {
        return Err(Error::ConstructionError("join tree does not span all cliques".into()));
    }
    let jt = JoinTree { cliques, root, edges, parent, children };
    for e in &jt.edges {
        let a = jt.cliques[e.parent].member_set();
        let b = jt.cliques[e.child].member_set();
        let shared: Vec<usize> = a.intersection(&b).copied().collect();
        if shared != [e.separator] {
            return Err(Error::ConstructionError(format!("separator {shared:?} is not a single variable")));
        }
    }
    if !jt.running_intersection() {
        return Err(Error::ConstructionError("running intersection violated".into()));
    }
    Ok(jt)
}

#[cfg(test)]
mod tests {
    use super::super::polytree::random_polytree;
    use super::*;
    use crate::generate::rng;

    #[test]
    fn families_and_join_tree() {
        for seed in 0..100 {
            let pt = random_polytree(10, 2, 3, &mut rng(seed)).unwrap();
            let (cliques, check) = extract_cliques(&pt).unwrap();
            assert!(check.chordal);
            for &v in &check.non_maximal_families {
                assert!(pt.var(v).parents.is_empty());
            }
            for c in &cliques {
                let expect: usize = c.members.iter().map(|&m| pt.var(m).domain).product();
                assert_eq!(c.states, expect);
            }
            let jt = build_join_tree(cliques, &pt, None).unwrap();
            assert_eq!(jt.edges.len(), pt.len() - 1);
            assert_eq!(jt.max_separator(), 1);
            assert!(jt.running_intersection());
        }
    }

    #[test]
    fn chordality_detects_square() {
        let mut adj = vec![BTreeSet::new(); 4];
        for (a, b) in [(0, 1), (1, 2), (2, 3), (3, 0)] {
            adj[a].insert(b);
            adj[b].insert(a);
        }
        assert!(!check_chordal(&adj).0);
        adj[0].insert(2);
        adj[2].insert(0);
        let (ok, max) = check_chordal(&adj);
        assert!(ok);
        assert_eq!(max.len(), 2);
    }

    #[test]
    fn clique_indexing() {
        let pt = random_polytree(6, 2, 3, &mut rng(3)).unwrap();
        let (cliques, _) = extract_cliques(&pt).unwrap();
        let c = cliques.iter().find(|c| c.members.len() > 1).unwrap();
        let dist = vec![1.0; c.states];
        let m = c.marginalize(&dist, c.members[0]).unwrap();
        assert_eq!(m.len(), c.sizes[0]);
        assert!(m.iter().all(|&x| x == (c.states / c.sizes[0]) as f64));
        assert_eq!(c.coord(c.states - 1, 0), c.sizes[0] - 1);
    }
}
