use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot parse exponent {0:?}")]
    ParseExponent(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric range error: {0}")]
    NumericRange(String),

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("invariant violated at n={n}: {what}")]
    Invariant { n: u64, what: String },
}
