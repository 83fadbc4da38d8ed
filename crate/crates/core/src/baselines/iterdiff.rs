//! Hypergradients by differentiating through unrolled gradient descent.

use std::time::Instant;

use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::hoag::{AdaptiveStepConfig, DecreaseTest, MIN_STEP, SHORT_STEP_PATIENCE};
use crate::linalg::{all_finite, axpy, distance, norm};
use crate::params::HyperParams;
use crate::problem::BilevelProblem;
use crate::trace::TraceRecord;

pub const POWER_ITERATIONS: usize = 20;
/// Consecutive increases of `h` that abort the forward pass.
const DIVERGENCE_PATIENCE: usize = 10;

/// `2 / (μ + L̂)` with `L̂` from power iteration on `∇₁²h(x0, λ)`.
/// Returns the step and the number of Hessian products spent.
pub fn inner_step_size<P: BilevelProblem + ?Sized>(problem: &P, lambda: &[f64], x0: &[f64]) -> Result<(f64, usize)> {
    let p = problem.n_params();
    let mut v = vec![1.0 / (p as f64).sqrt(); p];
    let mut top = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let w = problem.hessian_vec(x0, lambda, &v);
        if !all_finite(&w) {
            return Err(Error::NonFinite("Hessian-vector product"));
        }
        top = norm(&w);
        if top == 0.0 {
            break;
        }
        v = w.into_iter().map(|x| x / top).collect();
    }
    let mu = problem.strong_convexity(lambda);
    Ok((2.0 / (mu + top.max(mu)), POWER_ITERATIONS))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterdiffEstimate {
    pub grad: Vec<f64>,
    /// `g(x_T, λ)`
    pub outer_value: f64,
    pub x: Vec<f64>,
    /// `μ⁻¹‖∇₁h(x_T, λ)‖`
    pub inner_bound: f64,
}

/// Runs `steps` iterations of `x ← x − η∇₁h(x, λ)` from `x0`, then
/// back-propagates `g(x_T, λ)` through them:
///
/// ```text
/// a_T = ∇₁g(x_T),  d = ∇₂g(x_T)
/// d  -= η·(∇²₁,₂h(x_t))ᵀ a_{t+1}
/// a_t = a_{t+1} − η·∇₁²h(x_t) a_{t+1}
/// ```
pub fn iterdiff_gradient<P: BilevelProblem + ?Sized>(
    problem: &P,
    lambda: &[f64],
    x0: &[f64],
    steps: usize,
    eta: f64,
) -> Result<IterdiffEstimate> {
    if steps == 0 {
        return Err(Error::InvalidConfig("unrolled differentiation needs at least one step".into()));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidConfig(format!("inner step must be positive, got {eta}")));
    }
    Error::check_dim("unrolled warm start", problem.n_params(), x0.len())?;

    let mut iterates = Vec::with_capacity(steps + 1);
    iterates.push(x0.to_vec());
    let mut prev_h = f64::INFINITY;
    let mut increases = 0;
    let mut last = (0.0, Vec::new());
    for t in 0..=steps {
        let (h, g) = problem.inner_loss_grad(&iterates[t], lambda);
        if !h.is_finite() || !all_finite(&g) {
            return Err(Error::NonFinite("inner loss"));
        }
        if h > prev_h {
            increases += 1;
            if increases >= DIVERGENCE_PATIENCE {
                return Err(Error::Diverged(increases));
            }
        } else {
            increases = 0;
        }
        prev_h = h;
        if t == steps {
            last = (h, g);
            break;
        }
        let mut next = iterates[t].clone();
        axpy(-eta, &g, &mut next);
        iterates.push(next);
    }

    let x_final = iterates.last().expect("at least one iterate");
    let outer_value = problem.outer_loss(x_final, lambda);
    let mut adjoint = problem.outer_grad_params(x_final, lambda);
    let mut grad = problem.outer_grad_hyper(x_final, lambda);
    for x_t in iterates[..steps].iter().rev() {
        let cross = problem.cross_vec(x_t, lambda, &adjoint);
        axpy(-eta, &cross, &mut grad);
        let hv = problem.hessian_vec(x_t, lambda, &adjoint);
        axpy(-eta, &hv, &mut adjoint);
    }
    if !outer_value.is_finite() || !all_finite(&grad) {
        return Err(Error::NonFinite("unrolled hypergradient"));
    }
    Ok(IterdiffEstimate {
        grad,
        outer_value,
        inner_bound: norm(&last.1) / problem.strong_convexity(lambda),
        x: iterates.pop().expect("final iterate"),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterdiffConfig {
    pub domain: BoxDomain,
    pub max_outer_iters: usize,
    pub step: AdaptiveStepConfig,
    pub lambda0: HyperParams,
    /// Unrolled steps `T` per hypergradient.
    pub inner_steps: usize,
}

impl IterdiffConfig {
    pub fn for_problem<P: BilevelProblem + ?Sized>(problem: &P) -> Self {
        Self {
            domain: BoxDomain::symmetric(problem.n_hyper()),
            max_outer_iters: 100,
            step: AdaptiveStepConfig::default(),
            lambda0: problem.default_lambda0(),
            inner_steps: crate::solvers::DEFAULT_MAX_ITERS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterdiffRun {
    pub lambda: Vec<f64>,
    pub trace: Vec<TraceRecord>,
}

struct Evaluation {
    estimate: IterdiffEstimate,
    hessian_products: usize,
}

fn evaluate<P: BilevelProblem + ?Sized>(problem: &P, lambda: &[f64], steps: usize) -> Result<Evaluation> {
    // no warm start: every evaluation unrolls from the origin
    let x0 = vec![0.0; problem.n_params()];
    let (eta, power) = inner_step_size(problem, lambda, &x0)?;
    let estimate = iterdiff_gradient(problem, lambda, &x0, steps, eta)?;
    Ok(Evaluation {
        estimate,
        hessian_products: power + steps,
    })
}

/// The adaptive projected-gradient outer loop driven by unrolled
/// hypergradients, with all tolerances in the decrease test set to zero:
/// a step is kept when `g_new ≤ g_old − c·Δ²/η`.
pub fn iterdiff_run<P: BilevelProblem + ?Sized>(problem: &P, config: &IterdiffConfig) -> Result<IterdiffRun> {
    config.step.validate()?;
    Error::check_dim("initial hyperparameters", problem.n_hyper(), config.lambda0.len())?;
    if !config.domain.contains(&config.lambda0) {
        return Err(Error::InvalidConfig("initial hyperparameters lie outside the domain".into()));
    }
    let started = Instant::now();
    let lipschitz = problem.outer_lipschitz();
    let steps = config.inner_steps;

    let mut lambda = config.lambda0.to_vec();
    let first = evaluate(problem, &lambda, steps)?;
    let (mut inner_iters, mut hess_iters) = (steps, first.hessian_products);
    let mut current = first.estimate;
    let gnorm = norm(&current.grad);
    let mut step_size = if gnorm > 0.0 { 1.0 / gnorm } else { 1.0 };
    let mut trace = Vec::new();
    let mut push = |k: usize, lambda: &[f64], est: &IterdiffEstimate, step: f64, inner: usize, hess: usize| {
        trace.push(TraceRecord {
            k,
            lambda: lambda.to_vec(),
            epsilon: 0.0,
            outer_value: est.outer_value,
            grad_norm: norm(&est.grad),
            step_size: step,
            inner_iters: inner,
            cg_iters: hess,
            inner_bound: est.inner_bound,
            wall_time: started.elapsed().as_secs_f64(),
        });
    };
    push(1, &lambda, &current, step_size, inner_iters, hess_iters);

    let mut k = 1;
    let mut short_steps = 0;
    while k < config.max_outer_iters && gnorm > 0.0 && short_steps < SHORT_STEP_PATIENCE {
        let mut attempt = 0;
        let (candidate, estimate, delta) = loop {
            let moved: Vec<f64> = lambda.iter().zip(&current.grad).map(|(l, g)| l - step_size * g).collect();
            let candidate = config.domain.project(&moved);
            let delta = distance(&candidate, &lambda);
            let eval = evaluate(problem, &candidate, steps)?;
            inner_iters += steps;
            hess_iters += eval.hessian_products;
            if k == 1 {
                break (candidate, eval.estimate, delta);
            }
            let ok = DecreaseTest {
                g_new: eval.estimate.outer_value,
                g_old: current.outer_value,
                lipschitz,
                value_error_new: 0.0,
                value_error_old: 0.0,
                eps_old: 0.0,
                delta,
                step_size,
            }
            .holds(&config.step);
            if ok {
                step_size *= config.step.growth;
                break (candidate, eval.estimate, delta);
            }
            step_size *= config.step.shrink;
            attempt += 1;
            if attempt > config.step.max_shrinks {
                log::warn!("iterdiff k = {k}: keeping the last candidate after {attempt} step reductions");
                break (candidate, eval.estimate, delta);
            }
        };
        lambda = candidate;
        current = estimate;
        k += 1;
        short_steps = if delta <= MIN_STEP { short_steps + 1 } else { 0 };
        push(k, &lambda, &current, step_size, inner_iters, hess_iters);
        if norm(&current.grad) == 0.0 {
            break;
        }
    }
    Ok(IterdiffRun { lambda, trace })
}
