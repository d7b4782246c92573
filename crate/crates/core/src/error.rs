use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// A parameter lies outside the domain of the operation.
    #[error("parameter error: {0}")]
    Domain(String),
    /// Malformed textual input.
    #[error("parse error: {0}")]
    Parse(String),
    /// A series needed more terms than the configured hard limit.
    #[error("series did not converge within {0} terms")]
    NonConvergence(u64),
    /// An interval stayed too wide to decide a comparison at the maximum precision.
    #[error("indeterminate comparison: {0}")]
    Indeterminate(String),
    /// The privacy-loss grid could not be built within the configured limits.
    #[error("grid error: {0}")]
    Grid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
