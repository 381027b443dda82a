use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Caller passed inputs that violate an operation's preconditions.
    #[error("usage error: {0}")]
    Usage(String),

    /// The input is well formed but the requested quantity is undefined for it.
    #[error("domain error: {0}")]
    Domain(String),

    /// A generated instance failed one of its build-time structural checks.
    #[error("construction error: {0}")]
    Construction(String),

    /// A spanner used an edge outside the allowed edge universe.
    #[error("certification failure: edge ({source_id}, {target_id}) is not in the allowed edge set")]
    EdgeOutsideUniverse { source_id: usize, target_id: usize },
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
