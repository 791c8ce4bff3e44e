//! JSON network file: `{"nodes":[{"id", "domain", "parent", "cpt", "prior", "evidence"}]}`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{CausalTree, Evidence, Node, NodeId};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub nodes: Vec<NodeSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: String,
    pub domain: usize,
    #[serde(default)]
    pub parent: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cpt: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence: Option<Vec<f64>>,
}

/// Validates a network description. Child order is declaration order.
pub fn build_tree(spec: &NetworkFile) -> Result<CausalTree> {
    let mut index = HashMap::with_capacity(spec.nodes.len());
    for (i, n) in spec.nodes.iter().enumerate() {
        if index.insert(n.id.as_str(), i).is_some() {
            return Err(Error::DuplicateId(n.id.clone()));
        }
    }
    let mut nodes = Vec::with_capacity(spec.nodes.len());
    for n in &spec.nodes {
        let parent = match &n.parent {
            None => None,
            Some(p) => Some(NodeId(*index.get(p.as_str()).ok_or_else(|| {
                Error::UnknownParent(n.id.clone(), p.clone())
            })?)),
        };
        let cpt = match &n.cpt {
            None => None,
            Some(rows) => Some(Matrix::from_rows(rows).ok_or_else(|| {
                Error::Parse(format!("ragged cpt rows on `{}`", n.id))
            })?),
        };
        nodes.push(Node {
            name: n.id.clone(),
            domain: n.domain,
            parent,
            children: Vec::new(),
            cpt,
            prior: n.prior.clone(),
            evidence: n.evidence.clone().map(Evidence::new),
        });
    }
    for i in 0..nodes.len() {
        if let Some(p) = nodes[i].parent {
            nodes[p.0].children.push(NodeId(i));
        }
    }
    CausalTree::assemble(nodes)
}

impl CausalTree {
    pub fn from_json(text: &str) -> Result<CausalTree> {
        let spec: NetworkFile = serde_json::from_str(text)?;
        build_tree(&spec)
    }

    /// File description of this tree, nodes in id order.
    pub fn to_spec(&self) -> NetworkFile {
        NetworkFile {
            nodes: self
                .nodes()
                .iter()
                .map(|n| NodeSpec {
                    id: n.name.clone(),
                    domain: n.domain,
                    parent: n.parent.map(|p| self.name(p).to_string()),
                    cpt: n.cpt.as_ref().map(Matrix::to_rows),
                    prior: n.prior.clone(),
                    evidence: n.evidence.as_ref().map(|e| e.likelihood().to_vec()),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_spec()).expect("network serializes")
    }
}
