use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("unbalanced marginals: demand sums to {demand}, supply sums to {supply}")]
    UnbalancedMarginals { demand: u64, supply: u64 },

    #[error("{side} marginal at index {index} must be a positive integer")]
    NonPositiveMarginal { side: &'static str, index: usize },

    #[error("cost entry ({row}, {col}) is not finite")]
    NonFiniteCost { row: usize, col: usize },

    #[error("cost entry ({row}, {col}) is not an integer")]
    NonIntegralCost { row: usize, col: usize },

    #[error("cost matrix is identically zero")]
    DegenerateCost,

    #[error("epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),

    #[error("log-sum-exp underflow on {axis} {index}")]
    NumericUnderflow { axis: &'static str, index: usize },

    #[error("precondition violated: {0}")]
    PreconditionViolated(&'static str),

    #[error("iteration cap of {cap} exceeded")]
    IterationCapExceeded { cap: usize },

    #[error("max flow routed {routed} of the required {required}")]
    InfeasibleExtraction { routed: f64, required: f64 },

    #[error("edge {edge} is a self-loop")]
    SelfLoop { edge: usize },

    #[error("edge {edge} has zero capacity")]
    ZeroCapacity { edge: usize },

    #[error("edge {edge} references vertex {vertex}, graph has {vertices} vertices")]
    VertexOutOfRange {
        edge: usize,
        vertex: usize,
        vertices: usize,
    },

    #[error("vertex {vertex} has no incoming capacity")]
    IsolatedVertex { vertex: usize },

    #[error("net flow {net} at vertex {vertex}")]
    ConservationViolation { vertex: usize, net: f64 },

    #[error("rounding failed: {0}")]
    Rounding(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
