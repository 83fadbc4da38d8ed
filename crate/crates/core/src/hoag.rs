//! Projected gradient descent on the hyperparameters with approximate
//! hypergradients and an adaptive step size.
//!
//! At outer iteration `k`, with tolerance `ε_k`:
//!
//! 1. solve the inner problem to `‖X(λ_k) − x_k‖ ≤ ε_k`;
//! 2. solve `∇₁²h(x_k, λ_k)·q_k = ∇₁g(x_k, λ_k)` to residual `ε_k`;
//! 3. `p_k = ∇₂g(x_k, λ_k) − (∇²₁,₂h(x_k, λ_k))ᵀ·q_k`;
//! 4. `λ_{k+1} = P_D(λ_k − η·p_k)`.
//!
//! The step `η` is checked against the inexact sufficient-decrease condition
//! of [`DecreaseTest`] once the inner problem at the candidate has been
//! solved: satisfied grows `η` by `β`, violated shrinks it by `α` and retries
//! from `λ_k`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::linalg::{all_finite, distance, norm, sub};
use crate::params::{HyperParams, ModelParams};
use crate::problem::BilevelProblem;
use crate::schedule::{ToleranceSchedule, TOLERANCE_FLOOR};
use crate::solvers::{
    cg_solve, inner_solve, tolerate_cg, tolerate_inner, CgReport, InnerSolveReport, DEFAULT_MAX_ITERS,
};
use crate::trace::TraceRecord;

/// Steps shorter than this count towards termination.
pub const MIN_STEP: f64 = 1e-10;
/// Consecutive short steps after which a run stops.
pub const SHORT_STEP_PATIENCE: usize = 3;

/// Slack terms of the sufficient-decrease test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlackModel {
    /// `C·ε_new + ε_old·(C + M)·Δ`, with the tolerances as given.
    Printed,
    /// `e_new + e_old + M·ε_old·Δ`, where `e` bounds `|g − f|` at each
    /// iterate from the error the sub-solvers certify and, when the problem
    /// has one, the local bound of [`BilevelProblem::outer_smoothness`].
    /// `ε_old` is likewise replaced by the certified inner and CG errors when
    /// those are smaller.
    Derived,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveStepConfig {
    /// Gradient-error constant `M`.
    pub gradient_error: f64,
    /// `α ∈ (0, 1)`, applied to `η` when the decrease condition fails.
    pub shrink: f64,
    /// `β > 1`, applied to `η` when it holds.
    pub growth: f64,
    /// Retries per outer iteration before the last candidate is kept anyway.
    pub max_shrinks: usize,
    /// Coefficient `c` of the required decrease `c·Δ²/η`. The smoothness bound
    /// for a projected step only guarantees `c = ½`; `c = 1` can never hold
    /// with exact gradients on a convex objective.
    pub decrease_factor: f64,
    pub slack: SlackModel,
}

impl Default for AdaptiveStepConfig {
    fn default() -> Self {
        Self {
            gradient_error: 1.0,
            shrink: 0.5,
            growth: 1.05,
            max_shrinks: 20,
            decrease_factor: 0.5,
            slack: SlackModel::Derived,
        }
    }
}

impl AdaptiveStepConfig {
    /// Error level standing for `ε` in the gradient term, given the errors
    /// the sub-solvers certified.
    pub fn gradient_tolerance(&self, eps: f64, inner_bound: f64, cg_residual: f64) -> f64 {
        match self.slack {
            SlackModel::Printed => eps,
            SlackModel::Derived => eps.min(inner_bound.max(cg_residual)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gradient_error >= 0.0 && self.gradient_error.is_finite()) {
            return Err(Error::InvalidConfig("gradient-error constant M must be nonnegative".into()));
        }
        if !(self.decrease_factor >= 0.0 && self.decrease_factor.is_finite()) {
            return Err(Error::InvalidConfig("decrease factor must be nonnegative".into()));
        }
        if !(0.0 < self.shrink && self.shrink < 1.0 && 1.0 < self.growth && self.growth.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "step factors must satisfy 0 < alpha < 1 < beta, got alpha = {}, beta = {}",
                self.shrink, self.growth
            )));
        }
        Ok(())
    }

    /// Error bound `e` on `|g(x, λ) − f(λ)|` for a solve at tolerance `eps`
    /// that certified `‖x − X(λ)‖ ≤ certified`.
    pub fn value_error<P: BilevelProblem + ?Sized>(
        &self,
        problem: &P,
        x: &[f64],
        lambda: &[f64],
        eps: f64,
        certified: f64,
    ) -> f64 {
        match self.slack {
            SlackModel::Printed => problem.outer_lipschitz() * eps,
            SlackModel::Derived => {
                let d = eps.min(certified);
                let global = problem.outer_lipschitz() * d;
                match problem.outer_smoothness() {
                    Some(smooth) if d > 0.0 => {
                        let local = norm(&problem.outer_grad_params(x, lambda)) * d + 0.5 * smooth * d * d;
                        global.min(local)
                    }
                    _ => global,
                }
            }
        }
    }
}

/// Inputs of the inexact sufficient-decrease test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecreaseTest {
    /// `g` at the candidate and at the current iterate.
    pub g_new: f64,
    pub g_old: f64,
    /// Bounds on `|g − f|` at the candidate and at the current iterate.
    pub value_error_new: f64,
    pub value_error_old: f64,
    /// Lipschitz constant `C` of `g`.
    pub lipschitz: f64,
    /// Tolerance of the current solve, see
    /// [`AdaptiveStepConfig::gradient_tolerance`].
    pub eps_old: f64,
    /// Step length `Δ = ‖λ_new − λ_old‖`.
    pub delta: f64,
    /// Step size `η` the candidate was produced with.
    pub step_size: f64,
}

impl DecreaseTest {
    /// `g_new ≤ g_old + slack − c·Δ²/η`
    pub fn holds(&self, step: &AdaptiveStepConfig) -> bool {
        let m = step.gradient_error;
        let slack = match step.slack {
            SlackModel::Printed => self.value_error_new + self.eps_old * (self.lipschitz + m) * self.delta,
            SlackModel::Derived => self.value_error_new + self.value_error_old + m * self.eps_old * self.delta,
        };
        self.g_new <= self.g_old + slack - step.decrease_factor * self.delta * self.delta / self.step_size
    }
}

/// Iteration caps of the two sub-solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveLimits {
    pub inner_max_iters: usize,
    pub cg_max_iters: usize,
}

impl Default for SolveLimits {
    fn default() -> Self {
        Self {
            inner_max_iters: DEFAULT_MAX_ITERS,
            cg_max_iters: DEFAULT_MAX_ITERS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoagConfig {
    pub schedule: ToleranceSchedule,
    pub domain: BoxDomain,
    pub max_outer_iters: usize,
    pub step: AdaptiveStepConfig,
    pub lambda0: HyperParams,
    pub limits: SolveLimits,
}

impl HoagConfig {
    /// Exponential schedule, `[-12, 12]^s`, 100 outer iterations and the
    /// problem's default starting point.
    pub fn for_problem<P: BilevelProblem + ?Sized>(problem: &P) -> Self {
        Self {
            schedule: ToleranceSchedule::exponential(),
            domain: BoxDomain::symmetric(problem.n_hyper()),
            max_outer_iters: 100,
            step: AdaptiveStepConfig::default(),
            lambda0: problem.default_lambda0(),
            limits: SolveLimits::default(),
        }
    }

    pub fn with_schedule(mut self, schedule: ToleranceSchedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_lambda0(mut self, lambda0: HyperParams) -> Self {
        self.lambda0 = lambda0;
        self
    }

    pub fn with_max_outer_iters(mut self, n: usize) -> Self {
        self.max_outer_iters = n;
        self
    }

    pub fn validate(&self, n_hyper: usize) -> Result<()> {
        self.schedule.validate()?;
        self.step.validate()?;
        Error::check_dim("box domain", n_hyper, self.domain.dim())?;
        Error::check_dim("initial hyperparameters", n_hyper, self.lambda0.len())?;
        if !self.domain.contains(&self.lambda0) {
            return Err(Error::InvalidConfig("initial hyperparameters lie outside the domain".into()));
        }
        if self.max_outer_iters == 0 {
            return Err(Error::InvalidConfig("max_outer_iters must be positive".into()));
        }
        Ok(())
    }
}

/// Output of one approximate hypergradient evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct HypergradientEstimate {
    pub grad: Vec<f64>,
    pub inner: InnerSolveReport,
    pub cg: CgReport,
}

impl HypergradientEstimate {
    pub fn x(&self) -> &ModelParams {
        &self.inner.x
    }

    pub fn q(&self) -> &[f64] {
        &self.cg.q
    }
}

/// Steps 2 and 3 given an inner solution: the linear system at tolerance
/// `eps` warm-started at `q_warm`, then `p = ∇₂g − (∇²₁,₂h)ᵀq`.
pub fn hypergradient_at<P: BilevelProblem + ?Sized>(
    problem: &P,
    lambda: &[f64],
    inner: InnerSolveReport,
    q_warm: &[f64],
    eps: f64,
    cg_max_iters: usize,
) -> Result<HypergradientEstimate> {
    let x = inner.x.as_slice();
    let rhs = problem.outer_grad_params(x, lambda);
    if !all_finite(&rhs) {
        return Err(Error::NonFinite("outer gradient"));
    }
    let cg = tolerate_cg(cg_solve(
        |v| problem.hessian_vec(x, lambda, v),
        &rhs,
        q_warm,
        eps,
        cg_max_iters,
    ))?;
    let direct = problem.outer_grad_hyper(x, lambda);
    let cross = problem.cross_vec(x, lambda, &cg.q);
    let grad = sub(&direct, &cross);
    if !all_finite(&grad) {
        return Err(Error::NonFinite("hypergradient"));
    }
    Ok(HypergradientEstimate { grad, inner, cg })
}

/// Steps 1 to 3: approximate hypergradient at `λ` with tolerance `eps`.
/// Sub-solvers that run out of iterations are tolerated; their reports carry
/// the achieved accuracy.
pub fn approx_hypergradient<P: BilevelProblem + ?Sized>(
    problem: &P,
    lambda: &[f64],
    x_warm: &[f64],
    q_warm: &[f64],
    eps: f64,
    limits: &SolveLimits,
) -> Result<HypergradientEstimate> {
    let inner = tolerate_inner(inner_solve(problem, lambda, x_warm, eps, limits.inner_max_iters))?;
    hypergradient_at(problem, lambda, inner, q_warm, eps, limits.cg_max_iters)
}

/// `f(λ)` through a floor-tolerance inner solve warm-started at `x0`.
pub fn evaluate_outer<P: BilevelProblem + ?Sized>(
    problem: &P,
    lambda: &[f64],
    x0: &[f64],
    max_iters: usize,
) -> Result<(f64, InnerSolveReport)> {
    let report = tolerate_inner(inner_solve(problem, lambda, x0, TOLERANCE_FLOOR, max_iters))?;
    let value = problem.outer_loss(&report.x, lambda);
    if !value.is_finite() {
        return Err(Error::NonFinite("outer loss"));
    }
    Ok((value, report))
}

/// `‖λ − P_D(λ − p)‖`, zero exactly at stationary points of the box problem.
pub fn projected_gradient_norm(domain: &BoxDomain, lambda: &[f64], grad: &[f64]) -> f64 {
    let moved: Vec<f64> = lambda.iter().zip(grad).map(|(l, g)| l - g).collect();
    distance(lambda, &domain.project(&moved))
}

/// Mutable state of a run. `lambda`, `x` and `q` are the current iterate and
/// the warm starts for the next solves.
#[derive(Debug, Clone)]
pub struct HoagState {
    pub lambda: HyperParams,
    pub x: ModelParams,
    pub q: Vec<f64>,
    /// `η = 1/L`
    pub step_size: f64,
    pub k: usize,
    pub trace: Vec<TraceRecord>,
    grad: Vec<f64>,
    outer_value: f64,
    epsilon: f64,
    value_error: f64,
    gradient_tolerance: f64,
    inner_iters: usize,
    cg_iters: usize,
    short_steps: usize,
    finished: bool,
    started: Instant,
}

impl HoagState {
    /// Evaluates `p_1` at `λ_1 = config.lambda0` and sets `η_1 = 1/‖p_1‖`,
    /// so the first update has length at most 1. A zero `p_1` ends the run.
    pub fn initialize<P: BilevelProblem + ?Sized>(problem: &P, config: &HoagConfig) -> Result<Self> {
        config.validate(problem.n_hyper())?;
        let started = Instant::now();
        let eps = config.schedule.tolerance_at(1);
        let p = problem.n_params();
        let est = approx_hypergradient(problem, &config.lambda0, &vec![0.0; p], &vec![0.0; p], eps, &config.limits)?;
        let outer_value = problem.outer_loss(&est.inner.x, &config.lambda0);
        if !outer_value.is_finite() {
            return Err(Error::NonFinite("outer loss"));
        }
        let grad_norm = norm(&est.grad);
        let finished = grad_norm == 0.0;
        let mut state = Self {
            lambda: config.lambda0.clone(),
            step_size: if finished { 1.0 } else { 1.0 / grad_norm },
            k: 1,
            trace: Vec::new(),
            outer_value,
            epsilon: eps,
            value_error: config.step.value_error(
                problem,
                &est.inner.x,
                &config.lambda0,
                eps,
                est.inner.achieved_bound,
            ),
            gradient_tolerance: config.step.gradient_tolerance(
                eps,
                est.inner.achieved_bound,
                est.cg.residual_norm,
            ),
            inner_iters: est.inner.iterations,
            cg_iters: est.cg.iterations,
            short_steps: 0,
            finished,
            started,
            grad: est.grad,
            x: est.inner.x.clone(),
            q: est.cg.q,
        };
        state.record(est.inner.achieved_bound);
        Ok(state)
    }

    /// Hypergradient estimate `p_k` at the current iterate.
    pub fn grad(&self) -> &[f64] {
        &self.grad
    }

    /// `g(x_k, λ_k)`
    pub fn outer_value(&self) -> f64 {
        self.outer_value
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Set once the gradient vanishes or steps stay below [`MIN_STEP`].
    pub fn is_finished(&self) -> bool {
        self.finished
    }

    fn record(&mut self, inner_bound: f64) {
        self.trace.push(TraceRecord {
            k: self.k,
            lambda: self.lambda.to_vec(),
            epsilon: self.epsilon,
            outer_value: self.outer_value,
            grad_norm: norm(&self.grad),
            step_size: self.step_size,
            inner_iters: self.inner_iters,
            cg_iters: self.cg_iters,
            inner_bound,
            wall_time: self.started.elapsed().as_secs_f64(),
        });
    }
}

/// One outer iteration: from `(λ_k, p_k)` to `(λ_{k+1}, p_{k+1})`.
pub fn hoag_step<P: BilevelProblem + ?Sized>(
    problem: &P,
    mut state: HoagState,
    config: &HoagConfig,
) -> Result<HoagState> {
    if state.finished {
        return Ok(state);
    }
    let eps_next = config.schedule.tolerance_at(state.k + 1);
    let lipschitz = problem.outer_lipschitz();
    let first = state.k == 1;

    let mut attempt = 0;
    let (candidate, inner, outer_value, delta, value_error) = loop {
        let moved: Vec<f64> = state
            .lambda
            .iter()
            .zip(&state.grad)
            .map(|(l, g)| l - state.step_size * g)
            .collect();
        let candidate = config.domain.project(&moved);
        let delta = distance(&candidate, &state.lambda);
        let inner = tolerate_inner(inner_solve(
            problem,
            &candidate,
            &state.x,
            eps_next,
            config.limits.inner_max_iters,
        ))?;
        state.inner_iters += inner.iterations;
        let outer_value = problem.outer_loss(&inner.x, &candidate);
        if !outer_value.is_finite() {
            return Err(Error::NonFinite("outer loss"));
        }

        let value_error_new =
            config
                .step
                .value_error(problem, &inner.x, &candidate, eps_next, inner.achieved_bound);
        if first {
            break (candidate, inner, outer_value, delta, value_error_new);
        }
        let ok = DecreaseTest {
            g_new: outer_value,
            g_old: state.outer_value,
            lipschitz,
            value_error_new,
            value_error_old: state.value_error,
            eps_old: state.gradient_tolerance,
            delta,
            step_size: state.step_size,
        }
        .holds(&config.step);
        if ok {
            state.step_size *= config.step.growth;
            break (candidate, inner, outer_value, delta, value_error_new);
        }
        state.step_size *= config.step.shrink;
        attempt += 1;
        if attempt > config.step.max_shrinks {
            log::warn!(
                "k = {}: decrease condition still violated after {} step reductions; keeping the last candidate",
                state.k,
                config.step.max_shrinks
            );
            break (candidate, inner, outer_value, delta, value_error_new);
        }
    };

    let bound = inner.achieved_bound;
    let est = hypergradient_at(problem, &candidate, inner, &state.q, eps_next, config.limits.cg_max_iters)?;
    state.cg_iters += est.cg.iterations;
    state.value_error = value_error;
    state.gradient_tolerance = config.step.gradient_tolerance(eps_next, bound, est.cg.residual_norm);
    state.lambda = HyperParams::from_vec_unchecked(candidate);
    state.x = est.inner.x;
    state.q = est.cg.q;
    state.grad = est.grad;
    state.outer_value = outer_value;
    state.epsilon = eps_next;
    state.k += 1;

    if delta <= MIN_STEP {
        state.short_steps += 1;
    } else {
        state.short_steps = 0;
    }
    if state.short_steps >= SHORT_STEP_PATIENCE || norm(&state.grad) == 0.0 {
        state.finished = true;
    }
    state.record(bound);
    Ok(state)
}

/// Runs until `k = max_outer_iters` or the iterates stall, feeding each new
/// trace record to `sink`.
pub fn hoag_run_with_sink<P, S>(problem: &P, config: &HoagConfig, mut sink: S) -> Result<HoagState>
where
    P: BilevelProblem + ?Sized,
    S: FnMut(&TraceRecord),
{
    let mut state = HoagState::initialize(problem, config)?;
    sink(state.trace.last().expect("initial record"));
    while state.k < config.max_outer_iters && !state.finished {
        state = hoag_step(problem, state, config)?;
        sink(state.trace.last().expect("record per step"));
    }
    Ok(state)
}

/// [`hoag_run_with_sink`] without a sink; the trace stays in the state.
pub fn hoag_run<P: BilevelProblem + ?Sized>(problem: &P, config: &HoagConfig) -> Result<HoagState> {
    hoag_run_with_sink(problem, config, |_| {})
}
