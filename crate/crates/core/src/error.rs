use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("drift is singular at x = 0")]
    Singularity,

    #[error("drift is not radially symmetric")]
    NotRadial,

    #[error("drift is unbounded; regularize it before use")]
    UnboundedDrift,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("grid margin {available} cannot absorb kernel support {required} (tail mass above 1e-8)")]
    Margin { available: f64, required: f64 },

    #[error("grid spacing {spacing} does not resolve kernel scale sqrt(eps) = {scale}")]
    Unresolved { spacing: f64, scale: f64 },

    #[error("stability: {0}")]
    Stability(String),

    #[error("degenerate: {0}")]
    Degenerate(String),

    #[error("epsilon selection for n = {n} did not converge within {halvings} halvings")]
    NonConvergence { n: usize, halvings: usize },

    #[error("boundary flux {flux:.3e} exceeds {limit:.3e}; enlarge the domain")]
    BoundaryFlux { flux: f64, limit: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error("parse: {0}")]
    Parse(String),

    #[error("io: {0}")]
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
