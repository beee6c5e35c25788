use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate simplex: |volume| = {volume:e} is below the relative tolerance {tolerance:e}")]
    DegenerateSimplex { volume: f64, tolerance: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("inadmissible parameters (n={n}, k={k}, m={m}, p={p}): {inequality} fails")]
    Inadmissible { n: usize, k: usize, m: usize, p: f64, inequality: String },

    #[error("basis size overflows for n={n}, k={k}")]
    BasisOverflow { n: usize, k: usize },

    #[error("singular system at pivot {pivot}")]
    SingularSystem { pivot: usize },

    #[error("test function has no declared compact support")]
    MissingSupport,

    #[error("i/o failure: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
