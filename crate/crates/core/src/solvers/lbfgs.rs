use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::linalg::{all_finite, axpy, dot, norm, sub};
use crate::params::ModelParams;
use crate::problem::BilevelProblem;
use crate::solvers::cg::cg_solve;

#[derive(Debug, Clone, PartialEq)]
pub struct InnerSolveReport {
    pub x: ModelParams,
    pub grad_norm: f64,
    pub iterations: usize,
    /// `μ(λ)⁻¹ · ‖∇₁h(x, λ)‖`, an upper bound on `‖X(λ) − x‖`.
    pub achieved_bound: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsSettings {
    pub history: usize,
    pub armijo: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
}

impl Default for LbfgsSettings {
    fn default() -> Self {
        Self {
            history: 10,
            armijo: 1e-4,
            backtrack: 0.5,
            max_backtracks: 60,
        }
    }
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

/// Two-loop recursion: returns `−H·g` for the current inverse-Hessian estimate.
fn direction(grad: &[f64], pairs: &VecDeque<Pair>) -> Vec<f64> {
    let mut d: Vec<f64> = grad.iter().map(|g| -g).collect();
    let mut alphas = Vec::with_capacity(pairs.len());
    for pair in pairs.iter().rev() {
        let a = pair.rho * dot(&pair.s, &d);
        axpy(-a, &pair.y, &mut d);
        alphas.push(a);
    }
    if let Some(last) = pairs.back() {
        let gamma = dot(&last.s, &last.y) / dot(&last.y, &last.y);
        d.iter_mut().for_each(|v| *v *= gamma);
    } else {
        let g = norm(grad);
        if g > 1.0 {
            d.iter_mut().for_each(|v| *v /= g);
        }
    }
    for (pair, a) in pairs.iter().zip(alphas.into_iter().rev()) {
        let b = pair.rho * dot(&pair.y, &d);
        axpy(a - b, &pair.s, &mut d);
    }
    d
}

/// Minimizes `h(·, λ)` from the warm start `x0` until
/// `μ(λ)⁻¹‖∇₁h(x, λ)‖ ≤ eps`, which guarantees `‖X(λ) − x‖ ≤ eps`.
///
/// Quadratic inner problems go through conjugate gradient; everything else
/// uses L-BFGS with a backtracking Armijo line search. Running out of
/// iterations yields [`Error::InnerNotConverged`] carrying the best iterate.
pub fn inner_solve<P: BilevelProblem + ?Sized>(
    problem: &P,
    lambda: &[f64],
    x0: &[f64],
    eps: f64,
    max_iters: usize,
) -> Result<InnerSolveReport> {
    inner_solve_observed(problem, lambda, x0, eps, max_iters, &LbfgsSettings::default(), |_, _, _| {})
}

/// [`inner_solve`] with explicit L-BFGS settings and a callback invoked with
/// `(iteration, x, h(x))` after every accepted step.
pub fn inner_solve_observed<P, F>(
    problem: &P,
    lambda: &[f64],
    x0: &[f64],
    eps: f64,
    max_iters: usize,
    settings: &LbfgsSettings,
    mut observe: F,
) -> Result<InnerSolveReport>
where
    P: BilevelProblem + ?Sized,
    F: FnMut(usize, &[f64], f64),
{
    Error::check_dim("inner warm start", problem.n_params(), x0.len())?;
    Error::check_dim("hyperparameters", problem.n_hyper(), lambda.len())?;
    if !(eps > 0.0) {
        return Err(Error::InvalidConfig(format!("tolerance must be positive, got {eps}")));
    }
    let mu = problem.strong_convexity(lambda);
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "inner problem must be strongly convex, got mu = {mu}"
        )));
    }

    if problem.inner_is_quadratic() {
        return quadratic_solve(problem, lambda, x0, eps, max_iters, mu);
    }

    let mut x = x0.to_vec();
    let (mut h, mut g) = problem.inner_loss_grad(&x, lambda);
    if !h.is_finite() || !all_finite(&g) {
        return Err(Error::NonFinite("inner loss"));
    }
    let mut pairs: VecDeque<Pair> = VecDeque::with_capacity(settings.history);
    let mut iterations = 0;

    let converged = loop {
        let gnorm = norm(&g);
        if gnorm / mu <= eps {
            break true;
        }
        if iterations >= max_iters {
            break false;
        }

        let mut d = direction(&g, &pairs);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            pairs.clear();
            d = direction(&g, &pairs);
            slope = dot(&g, &d);
        }

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..settings.max_backtracks {
            let mut x_new = x.clone();
            axpy(t, &d, &mut x_new);
            let (h_new, g_new) = problem.inner_loss_grad(&x_new, lambda);
            if h_new.is_finite() && all_finite(&g_new) {
                let sufficient = h_new <= h + settings.armijo * t * slope;
                // Near the optimum, differences in h fall below round-off and
                // Armijo can no longer be evaluated; fall back on the gradient.
                let roundoff = h_new <= h + 1e-12 * h.abs() && norm(&g_new) < gnorm;
                if sufficient || roundoff {
                    accepted = Some((x_new, h_new, g_new));
                    break;
                }
            }
            t *= settings.backtrack;
        }
        let Some((x_new, h_new, g_new)) = accepted else {
            log::debug!("inner line search stalled at gradient norm {gnorm:.3e}");
            break false;
        };

        let s = sub(&x_new, &x);
        let y = sub(&g_new, &g);
        let sy = dot(&s, &y);
        if sy > 1e-16 * norm(&s) * norm(&y) && sy > 0.0 {
            if pairs.len() == settings.history {
                pairs.pop_front();
            }
            pairs.push_back(Pair { s, y, rho: 1.0 / sy });
        }
        x = x_new;
        h = h_new;
        g = g_new;
        iterations += 1;
        observe(iterations, &x, h);
    };

    let grad_norm = norm(&g);
    let report = InnerSolveReport {
        x: ModelParams::from_vec_unchecked(x),
        grad_norm,
        iterations,
        achieved_bound: grad_norm / mu,
        converged,
    };
    if converged {
        Ok(report)
    } else {
        Err(Error::InnerNotConverged(Box::new(report)))
    }
}

/// `h = ½xᵀHx − bᵀx`: solve `Hx = b` to residual `μ·eps`, since the residual
/// is exactly `∇₁h(x)`.
fn quadratic_solve<P: BilevelProblem + ?Sized>(
    problem: &P,
    lambda: &[f64],
    x0: &[f64],
    eps: f64,
    max_iters: usize,
    mu: f64,
) -> Result<InnerSolveReport> {
    let zero = vec![0.0; x0.len()];
    let b: Vec<f64> = problem.inner_grad(&zero, lambda).iter().map(|v| -v).collect();
    if !all_finite(&b) {
        return Err(Error::NonFinite("inner gradient"));
    }
    let apply = |v: &[f64]| problem.hessian_vec(x0, lambda, v);
    let (cg, converged) = match cg_solve(apply, &b, x0, mu * eps, max_iters) {
        Ok(report) => (report, true),
        Err(Error::CgNotConverged(report)) => (*report, false),
        Err(e) => return Err(e),
    };
    let report = InnerSolveReport {
        achieved_bound: cg.residual_norm / mu,
        grad_norm: cg.residual_norm,
        iterations: cg.iterations,
        x: ModelParams::from_vec_unchecked(cg.q),
        converged,
    };
    if converged {
        Ok(report)
    } else {
        Err(Error::InnerNotConverged(Box::new(report)))
    }
}
