use crate::error::{Error, Result};
use crate::linalg::{all_finite, axpy, dot, norm};

#[derive(Debug, Clone, PartialEq)]
pub struct CgReport {
    pub q: Vec<f64>,
    /// `‖A·q − b‖`, recomputed from the operator rather than the recursion.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn residual<A>(apply: &A, b: &[f64], q: &[f64]) -> Result<Vec<f64>>
where
    A: Fn(&[f64]) -> Vec<f64>,
{
    let aq = apply(q);
    if !all_finite(&aq) {
        return Err(Error::NonFinite("linear operator"));
    }
    Ok(b.iter().zip(&aq).map(|(bi, ai)| bi - ai).collect())
}

/// Matrix-free conjugate gradient for `A·q = b` with `A` symmetric positive
/// definite, warm-started at `q0`. Stops once `‖A·q − b‖ ≤ eps`.
///
/// An operator that is not positive definite shows up as a breakdown
/// (`pᵀAp ≤ 0`) and is reported as non-convergence.
pub fn cg_solve<A>(apply: A, b: &[f64], q0: &[f64], eps: f64, max_iters: usize) -> Result<CgReport>
where
    A: Fn(&[f64]) -> Vec<f64>,
{
    Error::check_dim("conjugate gradient warm start", b.len(), q0.len())?;
    if !(eps > 0.0) {
        return Err(Error::InvalidConfig(format!("tolerance must be positive, got {eps}")));
    }

    let mut q = q0.to_vec();
    let mut r = residual(&apply, b, &q)?;
    let mut rr = dot(&r, &r);
    let mut p = r.clone();
    let mut iterations = 0;

    let converged = loop {
        if rr.sqrt() <= eps {
            // the recursive residual drifts; confirm against the operator
            let true_r = residual(&apply, b, &q)?;
            let true_rr = dot(&true_r, &true_r);
            if true_rr.sqrt() <= eps {
                break true;
            }
            r = true_r;
            rr = true_rr;
            p.copy_from_slice(&r);
        }
        if iterations >= max_iters {
            break false;
        }

        let ap = apply(&p);
        if !all_finite(&ap) {
            return Err(Error::NonFinite("linear operator"));
        }
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            log::debug!("conjugate gradient breakdown: pᵀAp = {pap:e}");
            break false;
        }
        let alpha = rr / pap;
        axpy(alpha, &p, &mut q);
        axpy(-alpha, &ap, &mut r);
        let rr_next = dot(&r, &r);
        let beta = rr_next / rr;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        rr = rr_next;
        iterations += 1;
    };

    let residual_norm = norm(&residual(&apply, b, &q)?);
    let report = CgReport {
        q,
        residual_norm,
        iterations,
        converged,
    };
    if converged {
        Ok(report)
    } else {
        Err(Error::CgNotConverged(Box::new(report)))
    }
}
