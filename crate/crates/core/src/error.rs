use std::path::PathBuf;

use thiserror::Error;

/// Broad class of a failure, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// The caller supplied parameters that can never succeed.
    Config,
    /// A numerical procedure failed on otherwise valid input.
    Compute,
    /// Reading or writing external data failed.
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid disorder spec: {0}")]
    InvalidDisorder(String),

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("jacobi eigendecomposition did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("integration step too large: norm drifted by {drift:e}")]
    NormDrift { drift: f64 },

    #[error("invalid samples: {0}")]
    InvalidSamples(String),

    #[error("intensities are not normalized (sum = {sum})")]
    Unnormalized { sum: f64 },

    #[error("degenerate samples: {0}")]
    Degenerate(String),

    #[error("no phase boundary found: {0}")]
    NoBoundary(String),

    #[error("infeasible chord set: {0}")]
    InfeasibleChords(String),

    #[error("coupling must be positive, got {0}")]
    NonPositiveCoupling(f64),

    #[error("malformed PGM: {0}")]
    Pgm(String),

    #[error("malformed table: {0}")]
    Table(String),

    #[error("gaussian fit failed: {0}")]
    FitFailed(String),

    #[error("spot windows overlap: spots {0} and {1}")]
    OverlappingSpots(usize, usize),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidDisorder(_)
            | Error::InvalidLattice(_)
            | Error::InvalidParameter(_)
            | Error::OverlappingSpots(..) => ErrorClass::Config,
            Error::Io { .. } | Error::Pgm(_) | Error::Table(_) => ErrorClass::Io,
            _ => ErrorClass::Compute,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
