//! Contracted factored engine for polytree evidence updates and queries.

use super::compile::{compile_polytree, CompileOptions, CompiledPolytree};
use super::factored::FactoredMatrix;
use super::polytree::Polytree;
use crate::contraction::{ContractionIndex, UpdateReport};
use crate::counters::OpCounters;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{Belief, Evidence};

#[derive(Debug, Clone)]
pub struct PolytreeEngine {
    polytree: Polytree,
    compiled: CompiledPolytree,
    index: ContractionIndex<FactoredMatrix>,
}

impl PolytreeEngine {
    pub fn new(polytree: Polytree, opts: CompileOptions) -> Result<Self> {
        let compiled = compile_polytree(&polytree, opts)?;
        let index = ContractionIndex::with_coefficients(compiled.tree.clone(), compiled.factored.clone())?;
        Ok(PolytreeEngine { polytree, compiled, index })
    }

    pub fn polytree(&self) -> &Polytree {
        &self.polytree
    }

    pub fn compiled(&self) -> &CompiledPolytree {
        &self.compiled
    }

    pub fn index(&self) -> &ContractionIndex<FactoredMatrix> {
        &self.index
    }

    /// Dense pipeline over the current compiled tree, for equivalence checks.
    pub fn dense_index(&self) -> Result<ContractionIndex<Matrix>> {
        crate::contraction::contract(self.index.tree())
    }

    pub fn counters(&self) -> OpCounters {
        self.index.counters()
    }

    /// Sets the likelihood of variable `var` over its own domain.
    pub fn polytree_update(&mut self, var: &str, evidence: Evidence) -> Result<UpdateReport> {
        let v = self.polytree.index_of(var)?;
        self.index.update_evidence(self.compiled.evidence_leaf(v), evidence)
    }

    /// Posterior of `var`, read from its own clique.
    pub fn polytree_query(&self, var: &str) -> Result<Belief> {
        let v = self.polytree.index_of(var)?;
        self.query_via(v, v)
    }

    /// Posterior of variable `v` read from the clique of variable `host`,
    /// which must contain `v`.
    pub fn query_via(&self, v: usize, host: usize) -> Result<Belief> {
        let name = &self.polytree.var(v).name;
        let clique = self.compiled.clique(host);
        let b = self.index.belief_query(self.compiled.clique_node(host))?;
        let m = clique
            .marginalize(&b.dist, v)
            .ok_or_else(|| Error::UnknownVariable(format!("{name} in clique of {}", self.polytree.var(host).name)))?;
        Belief::from_unnormalized(name, &m)
    }
}
