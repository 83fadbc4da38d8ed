use thiserror::Error;

use crate::dataio::ParseError;
use crate::solvers::{CgReport, InnerSolveReport};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The inner solver exhausted its iteration budget. The report still holds
    /// the best iterate, which callers may choose to keep.
    #[error(
        "inner solve stopped after {} iterations with bound {:.3e} above the tolerance",
        .0.iterations,
        .0.achieved_bound
    )]
    InnerNotConverged(Box<InnerSolveReport>),

    #[error(
        "conjugate gradient stopped after {} iterations with residual {:.3e}",
        .0.iterations,
        .0.residual_norm
    )]
    CgNotConverged(Box<CgReport>),

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("forward pass diverged: inner loss increased for {0} consecutive steps")]
    Diverged(usize),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
        if expected == found {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                context,
                expected,
                found,
            })
        }
    }
}
