//! Finite-difference diagnostics for [`BilevelProblem`] oracles.
//!
//! These only call `inner_loss`, `inner_grad`, `outer_loss` and the inner
//! solver, so they stay independent of the implicit-differentiation path they
//! are used to check.

use crate::error::Result;
use crate::hoag::evaluate_outer;
use crate::linalg::{dot, norm, sub};
use crate::problem::BilevelProblem;

/// `‖a − b‖ / max(‖a‖, ‖b‖)`, or 0 when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let scale = norm(a).max(norm(b));
    if scale == 0.0 {
        0.0
    } else {
        norm(&sub(a, b)) / scale
    }
}

/// Central differences of a scalar function.
pub fn central_difference<F: Fn(&[f64]) -> f64>(f: F, at: &[f64], step: f64) -> Vec<f64> {
    let mut point = at.to_vec();
    (0..at.len())
        .map(|i| {
            point[i] = at[i] + step;
            let up = f(&point);
            point[i] = at[i] - step;
            let down = f(&point);
            point[i] = at[i];
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Relative error of `∇₁h` against central differences of `h`.
pub fn inner_grad_error<P: BilevelProblem + ?Sized>(p: &P, x: &[f64], lambda: &[f64], step: f64) -> f64 {
    let fd = central_difference(|v| p.inner_loss(v, lambda), x, step);
    relative_error(&p.inner_grad(x, lambda), &fd)
}

/// Relative error of `∇₁g` against central differences of `g`.
pub fn outer_grad_params_error<P: BilevelProblem + ?Sized>(p: &P, x: &[f64], lambda: &[f64], step: f64) -> f64 {
    let fd = central_difference(|v| p.outer_loss(v, lambda), x, step);
    relative_error(&p.outer_grad_params(x, lambda), &fd)
}

/// Relative error of `∇₂g` against central differences of `g` in `λ`.
pub fn outer_grad_hyper_error<P: BilevelProblem + ?Sized>(p: &P, x: &[f64], lambda: &[f64], step: f64) -> f64 {
    let fd = central_difference(|l| p.outer_loss(x, l), lambda, step);
    relative_error(&p.outer_grad_hyper(x, lambda), &fd)
}

/// Relative error of `∇₁²h·v` against a directional difference of `∇₁h`.
pub fn hessian_vec_error<P: BilevelProblem + ?Sized>(
    p: &P,
    x: &[f64],
    lambda: &[f64],
    v: &[f64],
    step: f64,
) -> f64 {
    let shifted = |t: f64| -> Vec<f64> {
        let point: Vec<f64> = x.iter().zip(v).map(|(xi, vi)| xi + t * vi).collect();
        p.inner_grad(&point, lambda)
    };
    let fd: Vec<f64> = shifted(step)
        .iter()
        .zip(shifted(-step))
        .map(|(a, b)| (a - b) / (2.0 * step))
        .collect();
    relative_error(&p.hessian_vec(x, lambda, v), &fd)
}

/// Relative error of `(∇²₁,₂h)ᵀ·v` against differences of `⟨v, ∇₁h⟩` in `λ`.
pub fn cross_vec_error<P: BilevelProblem + ?Sized>(
    p: &P,
    x: &[f64],
    lambda: &[f64],
    v: &[f64],
    step: f64,
) -> f64 {
    let fd = central_difference(|l| dot(v, &p.inner_grad(x, l)), lambda, step);
    relative_error(&p.cross_vec(x, lambda, v), &fd)
}

/// `|⟨u, Hv⟩ − ⟨v, Hu⟩| / max(|⟨u, Hv⟩|, |⟨v, Hu⟩|)`
pub fn hessian_asymmetry<P: BilevelProblem + ?Sized>(p: &P, x: &[f64], lambda: &[f64], u: &[f64], v: &[f64]) -> f64 {
    let a = dot(u, &p.hessian_vec(x, lambda, v));
    let b = dot(v, &p.hessian_vec(x, lambda, u));
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Central differences of `f(λ) = g(X(λ), λ)` for the listed coordinates, each
/// `X(λ)` computed by a floor-tolerance inner solve warm-started at `x0`.
pub fn fd_hypergradient<P: BilevelProblem + ?Sized>(
    problem: &P,
    lambda: &[f64],
    x0: &[f64],
    coords: &[usize],
    step: f64,
    max_iters: usize,
) -> Result<Vec<f64>> {
    let mut point = lambda.to_vec();
    let f = |l: &[f64]| evaluate_outer(problem, l, x0, max_iters).map(|(v, _)| v);
    coords
        .iter()
        .map(|&i| {
            point[i] = lambda[i] + step;
            let up = f(&point)?;
            point[i] = lambda[i] - step;
            let down = f(&point)?;
            point[i] = lambda[i];
            Ok((up - down) / (2.0 * step))
        })
        .collect()
}
