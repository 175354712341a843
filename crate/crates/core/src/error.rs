use thiserror::Error;

/// Errors raised by constructors and operations of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid finite space: {0}")]
    InvalidSpace(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("partitions live on different spaces ({left} vs {right} atoms)")]
    PartitionMismatch { left: usize, right: usize },

    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("negative mass {value} at ({row}, {col})")]
    NegativeMass { row: usize, col: usize, value: String },

    #[error("{axis} marginal violated at atom {index}: expected {expected}, found {found}")]
    Marginal {
        axis: &'static str,
        index: usize,
        expected: String,
        found: String,
    },

    #[error("map does not preserve measure at atom {atom}: preimage mass {found}, atom mass {expected}")]
    NotMeasurePreserving {
        atom: usize,
        expected: String,
        found: String,
    },

    #[error("convex weights must be positive and sum to 1 (sum = {0})")]
    ConvexWeights(String),

    #[error("Markov axiom '{axiom}' violated: {witness}")]
    AxiomViolation { axiom: &'static str, witness: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("window {lo}..={hi} does not contain the required range {need_lo}..={need_hi}")]
    WindowTooSmall {
        lo: i32,
        hi: i32,
        need_lo: i32,
        need_hi: i32,
    },

    #[error("site {site} lies outside window {lo}..={hi}")]
    SiteOutsideWindow { site: i32, lo: i32, hi: i32 },

    #[error("invalid symbolic system: {0}")]
    InvalidSystem(String),

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("degenerate matrix: {0}")]
    Degenerate(String),

    #[error("trajectory length {length} too short for lag {lag}")]
    InsufficientLength { length: usize, lag: usize },

    #[error("cannot parse '{input}': {reason}")]
    Parse { input: String, reason: String },

    #[error("primality search inconclusive: {0}")]
    Inconclusive(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
