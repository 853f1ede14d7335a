use thiserror::Error;

/// Errors produced by the solvers and domain-type constructors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point lies outside the domain of every piece")]
    OutsideAllDomains,

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("unsupported graph topology: {0}")]
    UnsupportedTopology(String),

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("exponential enumeration refused: {edges} edges exceed the cap of {cap} (2^{edges} pieces)")]
    EnumerationRefused { edges: usize, cap: usize },

    #[error("unsupported dimension for quadrature: n = {0}")]
    UnsupportedDimension(usize),

    #[error("quadrature failed to reach its error target (estimate {estimate:e}, target {target:e})")]
    Accuracy { estimate: f64, target: f64 },

    #[error("piece has an empty-interior domain; the partition integral is not defined")]
    EmptyInterior,

    #[error("piece {index}: {source}")]
    Piece {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn in_piece(self, index: usize) -> Self {
        Error::Piece {
            index,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
