use thiserror::Error;

use crate::poly::ParseError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point is infeasible (equality violation {equality:.3e}, inequality violation {inequality:.3e})")]
    Infeasible { equality: f64, inequality: f64 },

    #[error("projection did not converge (best residual {residual:.3e})")]
    ProjectionFailed { residual: f64 },

    #[error("all radii failed")]
    AllRadiiFailed,

    #[error("{what} did not converge (best value {best:.3e})")]
    NonConvergence { what: &'static str, best: f64 },

    #[error("iterate norm {norm:.3e} exceeded the divergence cap; the scalarization is likely unbounded")]
    Divergence { norm: f64 },

    #[error("no radius converged")]
    NoRadiusConverged,

    #[error("no traces supplied")]
    EmptyTraces,

    #[error("no section point found; the reference point may lie outside the reach of f(S)")]
    NoSectionPoint,

    #[error("all scalarized runs failed")]
    AllRunsFailed,

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
        if expected == got {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, got })
        }
    }
}
