use thiserror::Error;

/// Errors reported by the solvers and the assembly pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on the arguments was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An element could not be assembled (degenerate geometry).
    #[error("assembly failure on element {element}: {detail}")]
    AssemblyFailure { element: usize, detail: String },

    /// The Neumann problem has no positive principal eigenvalue
    /// (requires ∫_Ω m < 0 when β = 0).
    #[error("no positive principal eigenvalue: {0}")]
    NoPositiveEigenvalue(String),

    /// An iterative solver failed to converge or broke down.
    #[error("numeric failure: {0}")]
    NumericFailure(String),

    /// The time stepper blew up; a smaller dt is needed.
    #[error("instability: {0}")]
    Instability(String),

    /// Malformed file contents.
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::NumericFailure(msg.into())
    }
}
