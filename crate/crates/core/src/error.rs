use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("not a lattice: {a} and {b} have no {missing}")]
    NotALattice { a: String, b: String, missing: &'static str },

    #[error("lattice is not distributive")]
    NotDistributive,

    #[error("not a pairwise cover of {top}: {a} v {b} = {join}")]
    NotAPairwiseCover { top: String, a: String, b: String, join: String },

    #[error("{element} is not below {top}")]
    NotBelow { element: String, top: String },

    #[error("cube enumeration exceeded the cap of {cap} candidate covers; try parents_only")]
    CostCapExceeded { cap: u64 },

    #[error("missing structure map for cover {0}")]
    MissingCoverMap(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("commutativity violated on {from} -> {to} (paths through {via_a} and {via_b} differ)")]
    CommutativityViolation { from: String, to: String, via_a: String, via_b: String },

    #[error("naturality violated on cover {0}")]
    NaturalityViolation(String),

    #[error("{0} and {1} are not comparable")]
    NotComparable(String, String),

    #[error("not an interval: {0}")]
    NotAnInterval(String),

    #[error("unsupported poset: {0}")]
    PosetUnsupported(String),

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("no natural splitting exists: {0}")]
    NoSplitting(String),

    #[error("internal consistency check failed: {0}")]
    Internal(String),
}
