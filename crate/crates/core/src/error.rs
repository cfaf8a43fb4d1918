use alloc::string::String;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {0} is outside the supported range")]
    DimensionOutOfRange(usize),

    #[error("matrix is singular to working precision")]
    Singular,

    #[error("result would overflow (norm {norm:e})")]
    Range { norm: f64 },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("flow level {0} is not implemented")]
    UnsupportedLevel(usize),

    #[error("site {site} out of range for {sites} sites")]
    InvalidSite { site: usize, sites: usize },

    #[error("gradient does not commute with the Lax matrix (relative defect {defect:e})")]
    InvalidHamiltonian { defect: f64 },

    #[error("evaluation point lies within {distance:e} of a pole")]
    PoleProximity { distance: f64 },

    #[error("poles are not distinct")]
    CoincidentPoles,

    #[error("trajectory blew up at t = {t} (state norm {norm:e})")]
    BlowUp { t: f64, norm: f64 },

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("chart is not canonical (symplectic form defect {defect:e})")]
    NonCanonicalChart { defect: f64 },

    #[error("operation is not supported by the {0} structure")]
    NotApplicable(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
