use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("graph contains a cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("node sets differ: {0}")]
    NodeSetMismatch(String),

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error(
        "factorization of the regression system for `{variable}` failed (lambda = {lambda}, jitter up to {jitter})"
    )]
    Factorization {
        variable: String,
        lambda: f64,
        jitter: f64,
    },

    #[error(
        "numerical breakdown for pair ({intervened} -> {target}): squared distance {squared} below -{tolerance} (lambda = {lambda}, bandwidth_sq = {bandwidth_sq})"
    )]
    NegativeSquaredDistance {
        intervened: String,
        target: String,
        squared: f64,
        tolerance: f64,
        lambda: f64,
        bandwidth_sq: f64,
    },
}

impl Error {
    /// True for failures of the numerical machinery rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Factorization { .. } | Error::NegativeSquaredDistance { .. }
        )
    }
}
