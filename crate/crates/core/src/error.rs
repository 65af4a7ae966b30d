use alloc::string::String;

/// Failures raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An invalid grid, packet or physics setting.
    #[error("configuration error: {0}")]
    Config(String),

    /// Inputs that do not fit together (different grids, wrong matrix size, ...).
    #[error("usage error: {0}")]
    Usage(String),

    /// A packet or matrix that carries no usable information.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Löwdin orthonormalization of a (nearly) linearly dependent mode set.
    #[error("mode set is linearly dependent: smallest Gram eigenvalue {eigenvalue:e}")]
    SingularGram { eigenvalue: f64 },

    /// A Gram matrix that should be positive semidefinite is not.
    #[error("numerical input error: Gram matrix has eigenvalue {eigenvalue:e}")]
    IndefiniteGram { eigenvalue: f64 },

    /// The time step does not resolve the per-step phase advance.
    #[error(
        "time step too large: {source_term} phase advance {phase:.3} rad per step exceeds {limit} rad; try dt <= {suggested_dt:e}"
    )]
    StepSize {
        source_term: &'static str,
        phase: f64,
        limit: f64,
        suggested_dt: f64,
    },

    /// Non-finite values appeared during time stepping.
    #[error("numerical failure at step {step}: {what}")]
    NonFinite { step: usize, what: String },
}

pub type Result<T> = core::result::Result<T, Error>;
