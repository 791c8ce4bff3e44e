//! Polytrees compiled to clique trees and contracted with factored matrices.
//!
//! Each variable `v` gets the clique `{v} ∪ parents(v)`, and each polytree
//! edge becomes a join-tree edge whose separator is the parent variable, so
//! every separator is a single variable. Edge matrices have the form
//! `J · R` with `J` a 0/1 expansion onto the separator, which keeps rake
//! costs at `O(K L²)` instead of `O(K³)`.

mod cliques;
mod compile;
mod engine;
mod factored;
mod polytree;

pub use cliques::{build_join_tree, check_chordal, extract_cliques, moral_graph, Clique, JoinEdge, JoinTree, MoralCheck};
pub use compile::{compile_join_tree, compile_polytree, CompileOptions, CompiledPolytree, DEFAULT_K_CAP};
pub use engine::PolytreeEngine;
pub use factored::{factored_coeff_update, FactoredMatrix};
pub use polytree::{
    polytree_brute_force, prior_marginals, random_polytree, Polytree, PolytreeFile, Variable, VariableSpec,
};
