mod common;

use common::*;
use hoag_core::check::{fd_hypergradient, relative_error};
use hoag_core::hoag::*;
use hoag_core::problems::AnalyticToyProblem;
use hoag_core::schedule::TOLERANCE_FLOOR;
use hoag_core::*;

const WIDE: SolveLimits = SolveLimits {
    inner_max_iters: 2000,
    cg_max_iters: 2000,
};

/// f(λ) = ½‖c/(1+e^λ) − d‖²
fn toy_value(c: &[f64], d: &[f64], lambda: f64) -> f64 {
    let s = 1.0 / (1.0 + lambda.exp());
    0.5 * c.iter().zip(d).map(|(ci, di)| (ci * s - di).powi(2)).sum::<f64>()
}

fn toy_derivative(c: &[f64], d: &[f64], lambda: f64) -> f64 {
    let e = lambda.exp();
    let s = 1.0 / (1.0 + e);
    let ds = -e * s * s;
    c.iter().zip(d).map(|(ci, di)| (ci * s - di) * ci * ds).sum()
}

fn toy() -> (AnalyticToyProblem, Vec<f64>, Vec<f64>) {
    let c = vec![2.0, -1.0, 0.5];
    let d = vec![0.8, -0.2, 0.1];
    (AnalyticToyProblem::new(c.clone(), d.clone()).unwrap(), c, d)
}

fn floor_gradient<P: BilevelProblem>(p: &P, lambda: &[f64]) -> Vec<f64> {
    let z = vec![0.0; p.n_params()];
    approx_hypergradient(p, lambda, &z, &z, TOLERANCE_FLOOR, &WIDE).unwrap().grad
}

#[test]
fn scalar_toy_gradient_at_zero() {
    let p = AnalyticToyProblem::scalar(2.0, 0.0);
    let est = approx_hypergradient(&p, &[0.0], &[0.0], &[0.0], 1e-10, &SolveLimits::default()).unwrap();
    assert!((est.x()[0] - 1.0).abs() < 1e-10);
    assert!((est.q()[0] - 0.5).abs() < 1e-9);
    assert!((est.grad[0] + 0.5).abs() < 1e-9, "{:?}", est.grad);
}

#[test]
fn toy_gradient_matches_closed_form() {
    let (p, c, d) = toy();
    for lambda in [-8.0, -2.5, 0.0, 0.7, 3.0, 11.0] {
        let g = floor_gradient(&p, &[lambda]);
        let want = toy_derivative(&c, &d, lambda);
        assert!((g[0] - want).abs() < 1e-8, "λ = {lambda}: {} vs {want}", g[0]);
    }
}

#[test]
fn zero_outer_gradient_leaves_direct_term() {
    // d = X(λ) makes ∇₁g vanish at the solution
    let lambda = 0.4;
    let c = [1.5, -0.5];
    let d: Vec<f64> = c.iter().map(|v| v / (1.0 + f64::exp(lambda))).collect();
    let p = AnalyticToyProblem::new(c.to_vec(), d).unwrap();
    let est = approx_hypergradient(&p, &[lambda], &[0.0; 2], &[0.0; 2], TOLERANCE_FLOOR, &WIDE).unwrap();
    assert!(est.q().iter().all(|v| v.abs() < 1e-10));
    let direct = p.outer_grad_hyper(est.x(), &[lambda]);
    assert!((est.grad[0] - direct[0]).abs() < 1e-10);
}

#[test]
fn logistic_gradient_matches_finite_differences() {
    let s = split(&hoag_core::dataio::synth_classification(30, 5, 11), 11);
    let p = hoag_core::problems::LogisticL2Problem::new(&s.train, &s.test).unwrap();
    for lambda in [-1.0, 0.0, 1.5] {
        let est = approx_hypergradient(&p, &[lambda], &[0.0; 5], &[0.0; 5], 1e-10, &WIDE).unwrap();
        let fd = fd_hypergradient(&p, &[lambda], &[0.0; 5], &[0], 1e-5, 2000).unwrap();
        assert!(relative_error(&est.grad, &fd) < 1e-4, "λ = {lambda}: {:?} vs {fd:?}", est.grad);
    }
}

#[test]
fn first_step_has_unit_length() {
    let (p, ..) = toy();
    let config = HoagConfig::for_problem(&p);
    let state = HoagState::initialize(&p, &config).unwrap();
    let p1 = state.grad().to_vec();
    assert!((state.step_size - 1.0 / p1[0].abs()).abs() < 1e-15);
    let eta = state.step_size;
    let next = hoag_step(&p, state, &config).unwrap();
    assert_eq!(next.k, 2);
    assert!((next.lambda[0] - (0.0 - p1[0] / p1[0].abs())).abs() < 1e-12);
    assert!(next.lambda[0].abs() <= 1.0 + 1e-12);
    // the first step is accepted without touching η
    assert_eq!(next.step_size, eta);
}

#[test]
fn accepted_step_grows_eta() {
    let (p, ..) = toy();
    let config = HoagConfig::for_problem(&p);
    let mut state = HoagState::initialize(&p, &config).unwrap();
    state = hoag_step(&p, state, &config).unwrap();
    // a tiny step always passes the test
    state.step_size = 1e-3;
    let next = hoag_step(&p, state, &config).unwrap();
    assert!((next.step_size - 1.05e-3).abs() < 1e-15);
}

#[test]
fn rejected_step_halves_eta_and_retries() {
    let (p, ..) = toy();
    let config = HoagConfig::for_problem(&p);
    let mut state = HoagState::initialize(&p, &config).unwrap();
    state = hoag_step(&p, state, &config).unwrap();
    let (lambda, g) = (state.lambda[0], state.grad()[0]);
    let value = state.outer_value();
    state.step_size = 1e4;
    let next = hoag_step(&p, state, &config).unwrap();
    let shrinks = (1e4 * 1.05 / next.step_size).log2();
    assert!(shrinks >= 1.0 - 1e-9 && (shrinks - shrinks.round()).abs() < 1e-9, "{shrinks}");
    // the kept candidate came from λ_k with the reduced η
    let eta_used = next.step_size / 1.05;
    assert!((next.lambda[0] - (lambda - eta_used * g).clamp(-12.0, 12.0)).abs() < 1e-12);
    assert!(next.outer_value() <= value + 1e-3);
}

#[test]
fn decrease_test_reduces_without_errors() {
    let step = AdaptiveStepConfig::default();
    let base = DecreaseTest {
        g_new: 0.75,
        g_old: 1.0,
        value_error_new: 0.0,
        value_error_old: 0.0,
        lipschitz: 5.0,
        eps_old: 0.0,
        delta: 0.5,
        step_size: 0.25,
    };
    // c·Δ²/η = 0.5·0.25/0.25 = 0.5
    assert!(!base.holds(&step));
    assert!(DecreaseTest { g_new: 0.5, ..base }.holds(&step));
    assert!(!DecreaseTest { g_new: 0.5 + 1e-9, ..base }.holds(&step));
    // e_new + e_old + M·ε_old·Δ = 0.0625 + 0.125 + 0.25·0.5
    let derived = DecreaseTest {
        g_new: 0.5 + 0.3125,
        value_error_new: 0.0625,
        value_error_old: 0.125,
        eps_old: 0.25,
        ..base
    };
    assert!(derived.holds(&step));
    assert!(!DecreaseTest { g_new: derived.g_new + 1e-9, ..derived }.holds(&step));
    let printed = AdaptiveStepConfig {
        slack: SlackModel::Printed,
        decrease_factor: 1.0,
        ..step
    };
    // C·ε_new + ε_old·(C + M)·Δ − Δ²/η = 0.0625 + 0.125·6·0.5 − 1
    let t = DecreaseTest {
        g_new: 1.0 + 0.0625 + 0.375 - 1.0,
        value_error_new: 0.0625,
        value_error_old: 100.0,
        eps_old: 0.125,
        ..base
    };
    assert!(t.holds(&printed));
    assert!(!DecreaseTest { g_new: t.g_new + 1e-9, ..t }.holds(&printed));
}

#[test]
fn run_reaches_toy_argmin() {
    let (p, c, d) = toy();
    let star = golden_section(|l| toy_value(&c, &d, l), -12.0, 12.0, 1e-10);
    for kind in ScheduleKind::ALL {
        let config = HoagConfig::for_problem(&p).with_schedule(ToleranceSchedule::new(kind));
        let state = hoag_run(&p, &config).unwrap();
        assert!(state.k <= 100);
        assert!((state.lambda[0] - star).abs() <= 1e-4, "{kind}: {} vs {star}", state.lambda[0]);
    }
}

#[test]
fn exact_schedule_equals_floor_limit() {
    let (p, ..) = toy();
    let below_floor = ToleranceSchedule {
        scale: 1e-20,
        ..ToleranceSchedule::quadratic()
    };
    let a = hoag_run(&p, &HoagConfig::for_problem(&p).with_schedule(ToleranceSchedule::exact())).unwrap();
    let b = hoag_run(&p, &HoagConfig::for_problem(&p).with_schedule(below_floor)).unwrap();
    assert_eq!(a.trace.len(), b.trace.len());
    for (x, y) in a.trace.iter().zip(&b.trace) {
        assert_eq!(x.lambda, y.lambda);
        assert_eq!(x.epsilon, y.epsilon);
    }
}

#[test]
fn logistic_run_is_stationary() {
    let (p, _) = logistic_synthetic();
    let config = HoagConfig::for_problem(&p);
    let state = hoag_run(&p, &config).unwrap();
    let grad = floor_gradient(&p, &state.lambda);
    let pg = projected_gradient_norm(&config.domain, &state.lambda, &grad);
    assert!(pg <= 1e-4, "{pg:e}");
}

#[test]
fn iterates_stay_in_the_box() {
    // d far outside the reachable set pushes λ against the lower bound
    let p = AnalyticToyProblem::new(vec![1.0, 2.0], vec![3.0, 6.0]).unwrap();
    let config = HoagConfig::for_problem(&p).with_lambda0(HyperParams::new(vec![-11.5]).unwrap());
    let state = hoag_run(&p, &config).unwrap();
    assert!(state.trace.iter().all(|t| config.domain.contains(&t.lambda)));
    assert_eq!(state.lambda[0], -12.0);
}

#[test]
fn gradient_error_scales_linearly() {
    let (p, _) = logistic_synthetic();
    let exact = floor_gradient(&p, &[0.0]);
    let eps: Vec<f64> = (2..=8).map(|e| 10f64.powi(-e)).collect();
    let err: Vec<f64> = eps
        .iter()
        .map(|&e| {
            let est = approx_hypergradient(&p, &[0.0], &[0.0; 20], &[0.0; 20], e, &WIDE).unwrap();
            (est.grad[0] - exact[0]).abs()
        })
        .collect();
    let slope = log_log_slope(&eps, &err);
    assert!((0.5..=1.5).contains(&slope), "slope {slope}, errors {err:?}");
}

/// Least-squares slope of log err against log eps.
fn log_log_slope(eps: &[f64], err: &[f64]) -> f64 {
    let xs: Vec<f64> = eps.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = err.iter().map(|v| v.max(1e-300).ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn step_lengths_vanish() {
    let (p, ..) = toy();
    for kind in [ScheduleKind::Quadratic, ScheduleKind::Cubic, ScheduleKind::Exponential] {
        let config = HoagConfig::for_problem(&p).with_schedule(ToleranceSchedule::new(kind));
        let state = hoag_run(&p, &config).unwrap();
        let steps: Vec<f64> = state.trace.windows(2).map(|w| (w[1].lambda[0] - w[0].lambda[0]).abs()).collect();
        let q = steps.len() / 4;
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        let (first, last) = (mean(&steps[..q]), mean(&steps[steps.len() - q..]));
        assert!(last * 10.0 <= first, "{kind}: {first:e} then {last:e}");
    }
}

#[test]
fn interior_limit_is_stationary() {
    let (p, ..) = toy();
    let config = HoagConfig::for_problem(&p);
    let state = hoag_run(&p, &config).unwrap();
    assert!(config.domain.is_interior(&state.lambda, 1e-6));
    assert!(floor_gradient(&p, &state.lambda)[0].abs() <= 1e-3);
}

#[test]
fn trace_counters_are_cumulative() {
    let (p, _) = logistic_synthetic();
    let state = hoag_run(&p, &HoagConfig::for_problem(&p).with_max_outer_iters(20)).unwrap();
    assert_eq!(state.trace.first().unwrap().k, 1);
    for w in state.trace.windows(2) {
        assert_eq!(w[1].k, w[0].k + 1);
        assert!(w[1].inner_iters >= w[0].inner_iters);
        assert!(w[1].cg_iters >= w[0].cg_iters);
        assert!(w[1].wall_time >= w[0].wall_time);
        assert!(w[1].epsilon <= w[0].epsilon);
    }
}

#[test]
fn sink_sees_every_record() {
    let (p, ..) = toy();
    let mut seen = Vec::new();
    let state = hoag_run_with_sink(&p, &HoagConfig::for_problem(&p), |r| seen.push(r.k)).unwrap();
    assert_eq!(seen, state.trace.iter().map(|t| t.k).collect::<Vec<_>>());
}

#[test]
fn stationary_start_stops_immediately() {
    // c = d = 0 gives f ≡ 0
    let zero = AnalyticToyProblem::new(vec![0.0, 0.0], vec![0.0, 0.0]).unwrap();
    let state = hoag_run(&zero, &HoagConfig::for_problem(&zero)).unwrap();
    assert!(state.is_finished());
    assert_eq!(state.trace.len(), 1);
}

#[test]
fn invalid_configs_are_rejected() {
    let (p, ..) = toy();
    let outside = HoagConfig::for_problem(&p).with_lambda0(HyperParams::new(vec![13.0]).unwrap());
    assert!(matches!(hoag_run(&p, &outside), Err(Error::InvalidConfig(_))));
    let mut bad_step = HoagConfig::for_problem(&p);
    bad_step.step.growth = 0.9;
    assert!(matches!(hoag_run(&p, &bad_step), Err(Error::InvalidConfig(_))));
    let wrong_dim = HoagConfig::for_problem(&p).with_lambda0(HyperParams::new(vec![0.0, 0.0]).unwrap());
    assert!(matches!(hoag_run(&p, &wrong_dim), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn published_constants_are_defaults() {
    let step = AdaptiveStepConfig::default();
    assert_eq!((step.gradient_error, step.shrink, step.growth), (1.0, 0.5, 1.05));
    assert_eq!(step.max_shrinks, 20);
    let (p, ..) = toy();
    let config = HoagConfig::for_problem(&p);
    assert_eq!(config.limits.inner_max_iters, 100);
    assert_eq!((config.domain.lower(), config.domain.upper()), (&[-12.0][..], &[12.0][..]));
    assert_eq!(config.schedule.tolerance_at(1), 0.1);
}
