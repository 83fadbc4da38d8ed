//! Inexact solvers for the two sub-problems of each outer iteration: the
//! inner minimization of `h(·, λ)` and the linear system in `∇₁²h`.

mod cg;
mod lbfgs;

pub use cg::{cg_solve, CgReport};
pub use lbfgs::{inner_solve, inner_solve_observed, InnerSolveReport, LbfgsSettings};

use crate::error::{Error, Result};

/// Default iteration cap of both solvers per outer iteration.
pub const DEFAULT_MAX_ITERS: usize = 100;

/// Turns a non-converged inner solve into its best iterate, logging a warning.
/// Other errors pass through.
pub fn tolerate_inner(result: Result<InnerSolveReport>) -> Result<InnerSolveReport> {
    match result {
        Err(Error::InnerNotConverged(report)) => {
            log::debug!(
                "inner solve stopped at bound {:.3e} after {} iterations",
                report.achieved_bound,
                report.iterations
            );
            Ok(*report)
        }
        other => other,
    }
}

/// Same as [`tolerate_inner`] for conjugate gradient.
pub fn tolerate_cg(result: Result<CgReport>) -> Result<CgReport> {
    match result {
        Err(Error::CgNotConverged(report)) => {
            log::debug!(
                "conjugate gradient stopped at residual {:.3e} after {} iterations",
                report.residual_norm,
                report.iterations
            );
            Ok(*report)
        }
        other => other,
    }
}
