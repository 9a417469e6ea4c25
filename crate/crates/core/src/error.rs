use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter `{name}` must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("parameter `{name}` must be non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },

    #[error("parameter `{name}` = {value} outside [{lo}, {hi}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("cavity truncation n_max must be at least 1, got {0}")]
    Truncation(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("missing parameter: {0}")]
    Missing(&'static str),

    #[error("ion separation must be nonzero")]
    ZeroSeparation,

    #[error("matrix exponential failed: {0}")]
    Propagation(String),

    #[error("singular matrix in linear solve")]
    Singular,

    #[error("chain needs at least two links and a power of two, got m = {0}")]
    LinkCount(usize),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("unit error: {0}")]
    Unit(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn positive<T: crate::Real>(name: &'static str, value: T) -> Result<()> {
    if value > T::zero() && value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositive {
            name,
            value: value.to_f64_lossy(),
        })
    }
}

pub(crate) fn non_negative<T: crate::Real>(name: &'static str, value: T) -> Result<()> {
    if value >= T::zero() {
        Ok(())
    } else {
        Err(Error::Negative {
            name,
            value: value.to_f64_lossy(),
        })
    }
}

pub(crate) fn unit_interval<T: crate::Real>(name: &'static str, value: T) -> Result<()> {
    if value >= T::zero() && value <= T::one() {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value: value.to_f64_lossy(),
            lo: 0.0,
            hi: 1.0,
        })
    }
}
