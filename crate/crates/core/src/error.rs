use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("argument outside supported range: {0}")]
    OutOfRange(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("boundary data do not belong to this mesh ({0})")]
    MeshMismatch(String),

    #[error("root bracketing failed: {0}")]
    Bracketing(String),

    #[error("energy window around E = {center} (half-width {half_width}) contains no levels")]
    EmptyWindow { center: f64, half_width: f64 },

    #[error("no basis directions survive the regularization cutoff {cutoff:e}; increase the basis size")]
    EmptySubspace { cutoff: f64 },

    #[error("symbolic computation failed: {0}")]
    Symbolic(String),

    #[error("scalar set cannot express the divergence term {0}")]
    Unexpressible(String),

    #[error("unit vector b({alpha}) is not in the row space of M at equal energy; the system is inconsistent")]
    Inconsistent { alpha: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("trajectory integration failed: {0}")]
    Trajectory(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
