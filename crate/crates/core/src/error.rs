use thiserror::Error;

/// Errors raised by the disclosure toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A modelling assumption does not hold for the instance.
    #[error("assumption violated: {0}")]
    Assumption(String),

    /// Malformed or inconsistent input (instance, policy, grid sizes, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An argument outside the domain of the operation.
    #[error("{what} = {value} outside domain [{lower}, {upper}]")]
    OutOfDomain {
        what: &'static str,
        value: f64,
        lower: f64,
        upper: f64,
    },

    /// The operation needs a continuous type density but the instance has atoms.
    #[error("operation requires a continuous type distribution")]
    NeedsDensity,

    /// A candidate threshold fails the first-order optimality precondition.
    #[error("first-order condition fails at e* = {e_star} (alpha = {alpha}): residual {residual:e}")]
    FocPrecondition {
        alpha: f64,
        e_star: f64,
        residual: f64,
    },

    /// No supporting weight exists for a threshold below the alpha = 1 optimum.
    #[error("threshold {e_star} lies below the alpha = 1 optimum {e_one}; no supporting weight exists")]
    NoSupportingWeight { e_star: f64, e_one: f64 },

    /// Enumeration caps exceeded.
    #[error("grid too large: {0}")]
    GridCap(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
