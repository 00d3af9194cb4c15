//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("contour value h({t}) = {value} leaves the allowed band [{lo}, {hi}]")]
    ContourOutOfRange { t: f64, value: f64, lo: f64, hi: f64 },

    #[error("sampled seminorm {observed} exceeds the declared bound {declared} ({which})")]
    HoelderViolation {
        which: &'static str,
        observed: f64,
        declared: f64,
    },

    #[error("pixel index ({i}, {j}) out of bounds for an {n}x{n} grid")]
    IndexOutOfBounds { i: usize, j: usize, n: usize },

    #[error("kernel halfwidth {halfwidth} does not fit in an {n}x{n} image")]
    KernelTooLarge { halfwidth: usize, n: usize },

    #[error("grid size {n} must be even")]
    OddN { n: usize },

    #[error("oracle weights requested but no clean image was supplied")]
    MissingCleanImage,

    #[error("neighborhood halfwidth {delta} too large for n = {n} (need 2*delta+1 <= n)")]
    DeltaTooLarge { delta: usize, n: usize },

    #[error("search window halfwidth must be at least 1")]
    WindowTooSmall,

    #[error("grid size {n} is not a power of two")]
    NotPowerOfTwo { n: usize },

    #[error("rate fit needs at least 3 points, got {points}")]
    DegenerateFit { points: usize },

    #[error("{0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 1 for configuration problems,
    /// 2 for computation failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            _ => 2,
        }
    }
}

/// Shorthand for [`Error::Domain`] with a formatted message.
pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
