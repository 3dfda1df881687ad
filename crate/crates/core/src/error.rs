use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not an odd prime")]
    NotOddPrime(u32),

    #[error("modulus {modulus} is reducible over GF({p}): divisible by {factor}")]
    ReducibleModulus {
        p: u32,
        modulus: String,
        factor: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("function {name} is not planar: difference map for a = {witness} is not a bijection")]
    NotPlanar { name: String, witness: u32 },

    #[error("function {0} is not a normal planar function")]
    NotNormal(String),

    #[error("row width {got} does not match accumulator width {expected}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("{check} violated: {witness}")]
    Violation { check: &'static str, witness: String },

    #[error("rank engines disagree: gf2 = {gf2}, spectrum = {spectrum}")]
    EngineMismatch { gf2: usize, spectrum: usize },

    #[error("rank {rank} exceeds the oval upper bound {bound}")]
    UpperBoundExceeded { rank: usize, bound: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn violation(check: &'static str, witness: impl Into<String>) -> Self {
        Error::Violation {
            check,
            witness: witness.into(),
        }
    }
}
