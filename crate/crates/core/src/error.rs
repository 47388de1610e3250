use thiserror::Error;

/// Errors raised across the kernel, measure, simulation and verification layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation (t <= 0, bad alpha, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The moment condition `∫|f(y)||y|^N dy < ∞` fails or cannot be decided.
    #[error("integrability check failed at order {order}: {reason}")]
    Integrability { order: u32, reason: String },

    /// Malformed or inconsistent configuration.
    #[error("config error: {0}")]
    Config(String),

    /// A simulation would exceed (or did exceed) the particle cap.
    #[error("capacity error: {0}")]
    Capacity(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
