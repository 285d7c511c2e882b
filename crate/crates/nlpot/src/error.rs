use alloc::string::String;
use core::fmt;

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A constructor invariant was violated (dimension, spacing, radii, ...).
    Invalid(String),
    /// A geometric query left the sampled region (sphere outside grid, ...).
    OutOfDomain(String),
    /// An operation met a non-finite value where a finite one is required.
    NonFinite(String),
    /// Not enough samples/indices to carry out an estimate.
    Insufficient(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Invalid(m) => write!(f, "invalid input: {m}"),
            Error::OutOfDomain(m) => write!(f, "out of domain: {m}"),
            Error::NonFinite(m) => write!(f, "non-finite value: {m}"),
            Error::Insufficient(m) => write!(f, "insufficient data: {m}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! invalid {
    ($($arg:tt)*) => {
        return Err($crate::error::Error::Invalid(alloc::format!($($arg)*)))
    };
}
pub(crate) use invalid;
