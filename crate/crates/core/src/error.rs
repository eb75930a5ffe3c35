use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// `L^n` times the radius is no longer a finite double.
    #[error("enclosure-blowup: radius {radius} with Lipschitz constant {lipschitz} over {steps} steps is not finite")]
    EnclosureBlowup {
        radius: f64,
        lipschitz: f64,
        steps: u64,
    },

    #[error("support overflow: support {support} plus {steps} steps exceeds truncation {truncation}")]
    SupportOverflow {
        support: usize,
        steps: usize,
        truncation: usize,
    },

    #[error("scalar {re}{im:+}i is not unimodular for this system")]
    NotUnimodular { re: f64, im: f64 },

    #[error("operation requires a linear (weighted shift family) system")]
    NotLinear,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
