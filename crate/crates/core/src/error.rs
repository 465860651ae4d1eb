use thiserror::Error;

/// Every fallible operation in the crate reports one of these.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input lies outside the admissible range of a formula.
    #[error("domain error: {0}")]
    Domain(String),
    /// A numerical procedure failed to reach its tolerance.
    #[error("numerical error: {0}")]
    Numerical(String),
    /// The grid cannot resolve the domain.
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    /// A geometric construction degenerated (non star-shaped, zero radius, ...).
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    /// A least-squares fit could not be carried out.
    #[error("fit error: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
