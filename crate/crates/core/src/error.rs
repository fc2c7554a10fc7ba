use thiserror::Error;

/// Errors raised across the library.
///
/// Every variant names the operation (or field) that failed so that callers,
/// the CLI in particular, can surface a precise message.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("{op}: domain error: {msg}")]
    Domain { op: &'static str, msg: String },

    /// The caller asked for something the operation does not support
    /// (a derivative order beyond the cap, too few sweeps, ...).
    #[error("{op}: usage error: {msg}")]
    Usage { op: &'static str, msg: String },

    /// The request exceeds a configured resource limit.
    #[error("{op}: resource limit: {msg}")]
    Resource { op: &'static str, msg: String },

    /// An iterative numerical method did not reach its tolerance.
    #[error("{op}: numerical failure: {msg} (achieved {achieved:e})")]
    Numeric {
        op: &'static str,
        msg: String,
        achieved: f64,
    },

    /// A sequence specification violates one of its defining inequalities.
    #[error("invalid sequence specification: {}", .0.join("; "))]
    Validation(Vec<String>),

    /// The requested combination is known not to satisfy the hypotheses
    /// the computation relies on.
    #[error("{op}: unsupported: {msg}")]
    Unsupported { op: &'static str, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Error {
    Error::Domain {
        op,
        msg: msg.into(),
    }
}

pub(crate) fn usage(op: &'static str, msg: impl Into<String>) -> Error {
    Error::Usage {
        op,
        msg: msg.into(),
    }
}

pub(crate) fn ensure_finite(op: &'static str, name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(domain(op, format!("{name} must be finite, got {v}")))
    }
}
