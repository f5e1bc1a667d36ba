use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown atom `{0}`")]
    Reference(String),

    #[error("duplicate atom id `{0}`")]
    DuplicateId(String),

    #[error("invalid weight {weight} for `{id}`: weights must be finite and positive")]
    InvalidWeight { id: String, weight: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid exponent {0}: exponents must lie in [1, ∞]")]
    InvalidExponent(f64),

    #[error("unsupported exponents p = {p}, q = {q}: {reason}")]
    UnsupportedExponents { p: String, q: String, reason: String },

    #[error("relation has no pair ({s}, {t})")]
    MissingPair { s: String, t: String },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("mapping is not injective: {0}")]
    NotInjective(String),

    #[error("mapping leaves its target slice: {0}")]
    Range(String),

    #[error("mapping is not total: no image for `{0}`")]
    NotTotal(String),

    #[error("mapping is not of split form: {0}")]
    NotSplit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
