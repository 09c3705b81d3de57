use thiserror::Error;

/// Errors produced by measure construction, the solvers and file IO.
#[derive(Debug, Error)]
pub enum Error {
    /// Two point sets (or a point and a point set) disagree on dimension.
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// Malformed argument or measure.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The two measures do not carry the same total mass.
    #[error("mass mismatch between measures: {0} vs {1}")]
    MassMismatch(f64, f64),

    /// Supplies of a flow network do not sum to zero.
    #[error("unbalanced supplies: sum = {0}")]
    Unbalanced(f64),

    /// No feasible flow exists.
    #[error("infeasible flow network: {0}")]
    Infeasible(String),

    /// The exact solver refuses instances above its size cap.
    #[error("exact problem too large ({cells} cost entries, cap {cap}); use the approximate solver")]
    TooLarge { cells: u128, cap: u128 },

    /// File content could not be parsed.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// A computed object violated an invariant that should hold by construction.
    #[error("internal consistency error: {0}")]
    Internal(String),
}

impl Error {
    /// True for errors caused by problem size or infeasibility rather than bad input.
    pub fn is_resource(&self) -> bool {
        matches!(self, Error::TooLarge { .. } | Error::Infeasible(_))
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
