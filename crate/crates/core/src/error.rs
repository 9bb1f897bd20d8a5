use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("{0} is not a prime modulus")]
    NotPrime(u32),

    #[error("inverse of zero")]
    DivisionByZero,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("pair (A, B) is not controllable: controllability matrix has rank {rank}, expected {expected}")]
    NotControllable { rank: usize, expected: usize },

    #[error("pair (A, C) is not observable: observability matrix has rank {rank}, expected {expected}")]
    NotObservable { rank: usize, expected: usize },

    #[error("{what} needs {needed} enumeration steps, budget is {budget}")]
    BudgetExceeded {
        what: &'static str,
        needed: u128,
        budget: u64,
    },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("field mismatch: expected GF({expected}), found GF({found})")]
    FieldMismatch { expected: u32, found: u32 },

    #[error("{source_name}: line {line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
