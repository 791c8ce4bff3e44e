//! Exact inference on causal trees and polytrees.
//!
//! Three strategies share one data model:
//!
//! * [`propagate`]: linear-time λ/π propagation and a depth-bounded lazy variant;
//! * [`contraction`]: a RAKE-contracted index with logarithmic updates and queries;
//! * [`jointree`]: polytrees compiled to clique trees with factored edge
//!   matrices, then contracted.
//!
//! ```
//! use logbel_core::generate::{random_tree, rng};
//! use logbel_core::{contract, full_propagate, Evidence};
//!
//! let tree = random_tree(1023, 3, &mut rng(7))?;
//! let mut ix = contract(&tree)?;
//! let leaf = tree.leaves()[10];
//! ix.update_evidence(leaf, Evidence::hard(3, 2))?;
//! let belief = ix.belief_query(tree.root())?;
//!
//! let mut rebuilt = tree.clone();
//! rebuilt.set_evidence(leaf, Evidence::hard(3, 2))?;
//! let want = full_propagate(&rebuilt)?;
//! assert!(logbel_core::linalg::max_abs_diff(&belief.dist, &want.belief(tree.root())?.dist) < 1e-9);
//! # Ok::<(), logbel_core::Error>(())
//! ```

pub mod bench;
pub mod contraction;
pub mod counters;
pub mod error;
pub mod generate;
pub mod jointree;
pub mod linalg;
pub mod model;
pub mod propagate;
pub mod session;
pub mod stream;

pub use contraction::{contract, ContractionIndex};
pub use counters::{OpCounters, OpRecorder};
pub use error::{Error, Result};
pub use model::{Belief, CausalTree, Evidence, NodeId};
pub use propagate::{full_propagate, LazyState, PropagationTable};
pub use session::{Network, Session, Strategy};
