use thiserror::Error;

/// Errors raised across the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Shapes, subsystem names or dimensions do not fit together.
    #[error("composition error: {0}")]
    Composition(String),
    /// A precondition on the inputs was violated.
    #[error("contract violation: {0}")]
    Contract(String),
    /// Post-selection left no amplitude mass.
    #[error("post-selection error: {0}")]
    PostSelection(String),
    /// A free evolution pushed probability mass onto the periodic boundary.
    #[error("dispersion overflow: boundary mass {boundary_mass:.3e} exceeds {limit:.0e}")]
    DispersionOverflow { boundary_mass: f64, limit: f64 },
    /// A Bohmian trajectory left the grid.
    #[error("integration error: {0}")]
    Integration(String),
    /// Packets that should be disjoint still overlap.
    #[error("separation error: overlap mass {overlap:.3e} exceeds {limit:.0e}")]
    Separation { overlap: f64, limit: f64 },
    /// A configuration key is missing or invalid.
    #[error("{key}: {message}")]
    Config { key: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}
