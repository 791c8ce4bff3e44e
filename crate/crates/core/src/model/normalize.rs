use std::collections::HashSet;

use super::{CausalTree, Evidence, Node, NodeId};
use crate::error::Result;
use crate::linalg::Matrix;

/// Converts a tree to complete binary form.
///
/// Nodes with more than two children get a right spine of inserted copies
/// (same domain, identity edge matrix). Nodes with a single child gain a
/// unit-domain leaf with likelihood `[1]` and an all-ones edge column, which
/// contributes a constant factor to the parent's λ.
///
/// Original nodes keep their indices, so the returned id map is the identity
/// over `0..tree.len()`; new nodes are appended after them.
pub fn normalize_tree(tree: &CausalTree) -> Result<(CausalTree, Vec<NodeId>)> {
    let id_map: Vec<NodeId> = tree.ids().collect();
    if tree.is_complete_binary() {
        return Ok((tree.clone(), id_map));
    }

    let mut nodes: Vec<Node> = tree.nodes().to_vec();
    let mut names: HashSet<String> = nodes.iter().map(|n| n.name.clone()).collect();
    let mut fresh = |base: String| {
        let mut name = base;
        while names.contains(&name) {
            name.push('#');
        }
        names.insert(name.clone());
        name
    };

    for x in 0..tree.len() {
        let children = nodes[x].children.clone();
        let domain = nodes[x].domain;
        match children.len() {
            1 => {
                let leaf = NodeId(nodes.len());
                nodes.push(Node {
                    name: fresh(format!("{}#unit", nodes[x].name)),
                    domain: 1,
                    parent: Some(NodeId(x)),
                    children: Vec::new(),
                    cpt: Some(Matrix::filled(domain, 1, 1.0)),
                    prior: None,
                    evidence: Some(Evidence::new(vec![1.0])),
                });
                nodes[x].children.push(leaf);
            }
            m if m > 2 => {
                nodes[x].children = vec![children[0]];
                let mut owner = NodeId(x);
                let mut rest = &children[1..];
                let mut split = 0;
                loop {
                    split += 1;
                    let d = NodeId(nodes.len());
                    nodes.push(Node {
                        name: fresh(format!("{}#split{}", nodes[x].name, split)),
                        domain,
                        parent: Some(owner),
                        children: Vec::new(),
                        cpt: Some(Matrix::identity(domain)),
                        prior: None,
                        evidence: None,
                    });
                    nodes[owner.0].children.push(d);
                    let take = if rest.len() == 2 { 2 } else { 1 };
                    for &c in &rest[..take] {
                        nodes[d.0].children.push(c);
                        nodes[c.0].parent = Some(d);
                    }
                    if take == 2 {
                        break;
                    }
                    owner = d;
                    rest = &rest[1..];
                }
            }
            _ => {}
        }
    }
    Ok((CausalTree::assemble(nodes)?, id_map))
}
