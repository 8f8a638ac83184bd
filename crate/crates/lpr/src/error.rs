//! Error types shared across the engine.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, LprError>;

/// Everything that can go wrong while building or integrating a system.
#[derive(Debug, Error)]
pub enum LprError {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// Structure constants failed antisymmetry or the Jacobi identity.
    #[error("invalid structure constants: {0}")]
    InvalidAlgebra(String),

    #[error("matrix is not a group element: deviation {deviation:.3e} exceeds tolerance {tolerance:.1e}")]
    NotInGroup { deviation: f64, tolerance: f64 },

    /// A linear expansion in the representation basis did not close.
    #[error("basis expansion residual {residual:.3e} exceeds tolerance {tolerance:.1e}")]
    ExpansionResidual { residual: f64, tolerance: f64 },

    #[error("{what} is singular or ill-conditioned (condition estimate {cond:.3e})")]
    SingularMatrix { what: &'static str, cond: f64 },

    #[error("state outside scenario domain: {0}")]
    DomainViolation(String),

    #[error("Routh reduction requires an Abelian algebra, but structure constants are nonzero")]
    NonAbelian,

    #[error("momentum level-set root finding failed after {iterations} iterations (residual {residual:.3e})")]
    RootFinding { iterations: usize, residual: f64 },

    #[error("trajectory grids do not match: {0}")]
    GridMismatch(String),

    /// Wraps an integration failure with the time at which it occurred.
    #[error("numerical failure at t = {t}: {source}")]
    AtTime {
        t: f64,
        #[source]
        source: Box<LprError>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown scenario `{id}`; registered scenarios: {available}")]
    UnknownScenario { id: String, available: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl LprError {
    /// Attach the failing time to an error propagating out of an integrator.
    pub fn at_time(self, t: f64) -> LprError {
        LprError::AtTime {
            t,
            source: Box::new(self),
        }
    }
}
