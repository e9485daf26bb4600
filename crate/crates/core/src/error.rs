use thiserror::Error;

pub type Result<T, E = PricingError> = std::result::Result<T, E>;

/// Everything that can go wrong while building inputs or pricing.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PricingError {
    #[error("invalid term structure: {0}")]
    InvalidCurve(String),

    #[error("invalid contract: {0}")]
    InvalidContract(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// The closed form needs the payoff support to sit inside the live region.
    #[error(
        "strike {strike} is below the terminal barrier {terminal_barrier}; \
         no closed form in this regime, use the heat-kernel pricer"
    )]
    Regime { strike: f64, terminal_barrier: f64 },

    #[error("quadrature did not converge: achieved {achieved:.3e}, requested {requested:.3e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error(
        "grid too coarse: Richardson estimate {estimate:.3e} exceeds tolerance {tolerance:.3e}"
    )]
    GridTooCoarse { estimate: f64, tolerance: f64 },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for PricingError {
    fn from(e: serde_json::Error) -> Self {
        PricingError::Parse(e.to_string())
    }
}
