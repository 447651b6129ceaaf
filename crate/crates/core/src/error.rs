use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("{a} is not invertible modulo {m}")]
    NotCoprime { a: u64, m: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: {primes} primes but {exponents} exponents")]
    LengthMismatch { primes: usize, exponents: usize },

    #[error("invalid case: {0}")]
    InvalidCase(String),

    #[error("rule not applicable: {0}")]
    Inapplicable(String),

    #[error("invalid search job: {0}")]
    InvalidJob(String),

    #[error("checkpoint {path}: {reason}")]
    Checkpoint { path: PathBuf, reason: String },

    #[error("artifact schema: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
