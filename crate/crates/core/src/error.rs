use thiserror::Error;

/// Errors raised while building, mutating or querying networks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("duplicate node id `{0}`")]
    DuplicateId(String),
    #[error("network has no root (every node names a parent)")]
    MissingRoot,
    #[error("network has several roots: {0:?}")]
    MultipleRoots(Vec<String>),
    #[error("node `{0}` is not reachable from the root (cycle or dangling parent)")]
    Cycle(String),
    #[error("node `{0}` references unknown parent `{1}`")]
    UnknownParent(String, String),
    #[error("row {row} of the conditional table of `{node}` is not stochastic (sum = {sum})")]
    RowNotStochastic { node: String, row: usize, sum: f64 },
    #[error("negative or non-finite probability in `{0}`")]
    InvalidProbability(String),
    #[error("dimension mismatch at `{node}`: expected {expected}, found {found}")]
    DimensionMismatch {
        node: String,
        expected: usize,
        found: usize,
    },
    #[error("leaf `{0}` carries no evidence")]
    LeafWithoutEvidence(String),
    #[error("field `{field}` is not allowed on node `{node}`")]
    UnexpectedField { node: String, field: &'static str },
    #[error("field `{field}` is required on node `{node}`")]
    MissingField { node: String, field: &'static str },
    #[error("node `{0}` is not a leaf")]
    NotALeaf(String),
    #[error("node `{0}` is not an internal node")]
    NotInternal(String),
    #[error("likelihood for `{0}` is all zero")]
    AllZeroLikelihood(String),
    #[error("joint state space of {0} states exceeds the enumeration cap of {1}")]
    StateSpaceTooLarge(u128, u128),
    #[error("evidence is impossible: total mass at `{0}` is zero")]
    ImpossibleEvidence(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("tree has {0} nodes; contraction needs at least 3")]
    TreeTooSmall(usize),
    #[error("leaf `{0}` cannot be raked: {1}")]
    NotRakeable(String, &'static str),
    #[error("node `{node}` has no equations at level {level}")]
    LevelOutOfRange { node: String, level: usize },
    #[error("network is not a polytree: {0}")]
    NotAPolytree(String),
    #[error("join tree construction failed: {0}")]
    ConstructionError(String),
    #[error("prior marginal of `{0}` has a zero entry and is needed as a divisor")]
    ZeroMarginalDivisor(String),
    #[error("clique of `{0}` has {1} states, above the cap of {2}")]
    DimensionOverflow(String, usize, usize),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("strategy `{0}` cannot run on {1}")]
    UnsupportedStrategy(String, &'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
