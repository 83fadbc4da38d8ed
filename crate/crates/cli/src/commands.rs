use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, ensure, Context};
use hoag_core::baselines::{grid_search, iterdiff_run, random_search, EvaluationBudget, IterdiffConfig};
use hoag_core::check::fd_hypergradient;
use hoag_core::hoag::{approx_hypergradient, evaluate_outer, hoag_run, SolveLimits};
use hoag_core::linalg::distance;
use hoag_core::schedule::TOLERANCE_FLOOR;
use hoag_core::{BilevelProblem, BoxDomain, HoagConfig, HyperParams, ToleranceSchedule, TraceRecord};
use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::spec::{build_instance, Instance, Method, RunSpec};

/// Iteration caps for floor-tolerance evaluations of `f`.
const REEVALUATION_ITERS: usize = 5000;
const GRADCHECK_LIMITS: SolveLimits = SolveLimits {
    inner_max_iters: 5000,
    cg_max_iters: 5000,
};
const REFERENCE_RESTARTS: u64 = 10;
/// Largest grid `cmd_run` will enumerate.
const MAX_GRID_SIZE: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub final_lambda: Vec<f64>,
    pub final_outer_value: f64,
    pub total_inner_iters: usize,
    pub total_cg_iters: usize,
    pub wall_time: f64,
}

pub struct Outcome {
    pub trace: Vec<TraceRecord>,
    pub summary: Summary,
}

pub fn create_output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

/// Runs the method of `spec` on `problem`.
pub fn execute(spec: &RunSpec, problem: &dyn BilevelProblem) -> anyhow::Result<Outcome> {
    let started = Instant::now();
    let domain = BoxDomain::symmetric(problem.n_hyper());
    let (trace, final_lambda, final_outer_value) = match spec.method {
        Method::Hoag => {
            let config = HoagConfig::for_problem(problem)
                .with_schedule(ToleranceSchedule::new(spec.schedule_kind()))
                .with_max_outer_iters(spec.max_iters);
            let state = hoag_run(problem, &config)?;
            let value = state.outer_value();
            (state.trace, state.lambda.into_inner(), value)
        }
        Method::Iterdiff => {
            let mut config = IterdiffConfig::for_problem(problem);
            config.max_outer_iters = spec.max_iters;
            let run = iterdiff_run(problem, &config)?;
            let value = run.trace.last().map_or(f64::NAN, |t| t.outer_value);
            (run.trace, run.lambda, value)
        }
        Method::Grid => {
            let size = u32::try_from(problem.n_hyper())
                .ok()
                .and_then(|s| spec.grid_points.checked_pow(s))
                .filter(|&n| n <= MAX_GRID_SIZE);
            let Some(size) = size else {
                bail!(
                    "a grid of {} points in {} dimensions exceeds {MAX_GRID_SIZE} evaluations",
                    spec.grid_points,
                    problem.n_hyper()
                );
            };
            let r = grid_search(problem, &domain, spec.grid_points, &EvaluationBudget::new(size))?;
            (r.trace, r.best_lambda, r.best_value)
        }
        Method::Random => {
            let r = random_search(problem, &domain, &EvaluationBudget::new(spec.max_iters), spec.seed)?;
            (r.trace, r.best_lambda, r.best_value)
        }
    };
    let last = trace.last().context("the run produced no trace")?;
    let summary = Summary {
        final_lambda,
        final_outer_value,
        total_inner_iters: last.inner_iters,
        total_cg_iters: last.cg_iters,
        wall_time: started.elapsed().as_secs_f64(),
    };
    Ok(Outcome { trace, summary })
}

pub fn cmd_run(spec: &RunSpec) -> anyhow::Result<()> {
    spec.validate()?;
    let instance = build_instance(spec)?;
    info!("{} on {} ({} hyperparameters)", spec.label(), instance.problem.name(), instance.problem.n_hyper());
    let outcome = execute(spec, instance.problem.as_ref())?;
    let mut out = create_output(spec.out.as_deref())?;
    for record in &outcome.trace {
        serde_json::to_writer(&mut out, record)?;
        writeln!(out)?;
    }
    serde_json::to_writer(&mut out, &outcome.summary)?;
    writeln!(out)?;
    out.flush()?;
    info!(
        "finished after {} records, outer value {:.6e}",
        outcome.trace.len(),
        outcome.summary.final_outer_value
    );
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub method: String,
    pub work_units: usize,
    pub suboptimality: f64,
    pub validation_loss: f64,
}

fn thread_pool() -> anyhow::Result<rayon::ThreadPool> {
    let threads = match std::env::var("HOAG_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .with_context(|| format!("HOAG_THREADS must be a positive integer, got {v:?}"))?,
        Err(_) => 0,
    };
    Ok(rayon::ThreadPoolBuilder::new().num_threads(threads).build()?)
}

/// `f` at floor tolerance for every trace record, paired with work units.
fn reevaluate(problem: &dyn BilevelProblem, trace: &[TraceRecord]) -> anyhow::Result<Vec<(usize, f64)>> {
    let x0 = vec![0.0; problem.n_params()];
    trace
        .iter()
        .map(|t| Ok((t.work_units(), evaluate_outer(problem, &t.lambda, &x0, REEVALUATION_ITERS)?.0)))
        .collect()
}

/// Best floor-tolerance value seen by HOAG exponential runs from random
/// starting points in the box.
fn reference_value(problem: &dyn BilevelProblem, seed: u64) -> anyhow::Result<f64> {
    let domain = BoxDomain::symmetric(problem.n_hyper());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<Vec<f64>> = (0..REFERENCE_RESTARTS)
        .map(|_| {
            domain
                .lower()
                .iter()
                .zip(domain.upper())
                .map(|(lo, hi)| rng.random_range(*lo..*hi))
                .collect()
        })
        .collect();
    let minima = starts
        .into_par_iter()
        .map(|lambda0| -> anyhow::Result<f64> {
            let config = HoagConfig::for_problem(problem).with_lambda0(HyperParams::new(lambda0)?);
            let state = hoag_run(problem, &config)?;
            Ok(reevaluate(problem, &state.trace)?.into_iter().map(|r| r.1).fold(f64::INFINITY, f64::min))
        })
        .collect::<anyhow::Result<Vec<f64>>>()?;
    Ok(minima.into_iter().fold(f64::INFINITY, f64::min))
}

struct Curve {
    label: String,
    points: Vec<(usize, f64)>,
    validation: Vec<f64>,
}

fn curve(spec: &RunSpec, instance: &Instance) -> anyhow::Result<Curve> {
    let outcome = execute(spec, instance.problem.as_ref())?;
    let points = reevaluate(instance.problem.as_ref(), &outcome.trace)?;
    let x0 = vec![0.0; instance.validation.n_params()];
    let validation = outcome
        .trace
        .iter()
        .map(|t| Ok(evaluate_outer(instance.validation.as_ref(), &t.lambda, &x0, REEVALUATION_ITERS)?.0))
        .collect::<anyhow::Result<_>>()?;
    info!("{}: {} records", spec.label(), points.len());
    Ok(Curve {
        label: spec.label(),
        points,
        validation,
    })
}

/// Runs every spec on their shared instance and scores each trace record
/// against the best value found.
pub fn compare(specs: &[RunSpec]) -> anyhow::Result<Vec<CompareRow>> {
    ensure!(specs.len() >= 2, "compare needs at least two runs");
    for spec in specs {
        spec.validate()?;
        ensure!(
            spec.same_instance(&specs[0]),
            "run {} uses a different problem instance than run {}",
            spec.label(),
            specs[0].label()
        );
    }
    let instance = build_instance(&specs[0])?;
    let pool = thread_pool()?;
    let (curves, reference) = pool.install(|| {
        rayon::join(
            || specs.par_iter().map(|s| curve(s, &instance)).collect::<anyhow::Result<Vec<_>>>(),
            || reference_value(instance.problem.as_ref(), specs[0].seed),
        )
    });
    let curves = curves?;
    // f* is the observed minimum, so it also covers every compared row
    let f_star = curves
        .iter()
        .flat_map(|c| c.points.iter().map(|r| r.1))
        .fold(reference?, f64::min);
    info!("reference value {f_star:.12e}");
    Ok(curves
        .into_iter()
        .flat_map(|c| {
            let label = c.label;
            c.points.into_iter().zip(c.validation).map(move |((work_units, value), validation_loss)| CompareRow {
                method: label.clone(),
                work_units,
                suboptimality: value - f_star,
                validation_loss,
            })
        })
        .collect())
}

pub fn cmd_compare(specs: &[RunSpec], out: Option<&Path>) -> anyhow::Result<()> {
    let rows = compare(specs)?;
    let mut writer = csv::Writer::from_writer(create_output(out)?);
    for row in &rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradcheckEntry {
    pub epsilon: f64,
    pub error: f64,
    pub gradient: Vec<f64>,
    pub inner_iters: usize,
    pub cg_iters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradcheckReport {
    pub problem: String,
    pub lambda: Vec<f64>,
    pub fd_step: f64,
    pub fd_gradient: Vec<f64>,
    pub entries: Vec<GradcheckEntry>,
    /// Least-squares slope of `log error` against `log ε`; absent with fewer
    /// than two distinct tolerances.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
}

pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.max(f64::MIN_POSITIVE).ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if lx.len() < 2 || sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

/// Hypergradient error at each tolerance against central differences of
/// `f` computed at floor tolerance.
pub fn gradcheck(
    problem: &dyn BilevelProblem,
    lambda: Option<Vec<f64>>,
    eps_list: &[f64],
    fd_step: f64,
) -> anyhow::Result<GradcheckReport> {
    ensure!(!eps_list.is_empty(), "--eps-list needs at least one tolerance");
    if let Some(e) = eps_list.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        bail!("tolerances must be positive, got {e}");
    }
    let lambda = match lambda {
        Some(l) => {
            ensure!(
                l.len() == problem.n_hyper(),
                "--lambda has {} values, the problem has {} hyperparameters",
                l.len(),
                problem.n_hyper()
            );
            ensure!(l.iter().all(|v| v.is_finite()), "--lambda values must be finite");
            l
        }
        None => problem.default_lambda0().into_inner(),
    };
    let z = vec![0.0; problem.n_params()];
    let coords: Vec<usize> = (0..lambda.len()).collect();
    let fd = fd_hypergradient(problem, &lambda, &z, &coords, fd_step, REEVALUATION_ITERS)?;
    let entries = eps_list
        .iter()
        .map(|&eps| {
            let est = approx_hypergradient(problem, &lambda, &z, &z, eps.max(TOLERANCE_FLOOR), &GRADCHECK_LIMITS)?;
            Ok(GradcheckEntry {
                epsilon: eps,
                error: distance(&est.grad, &fd),
                inner_iters: est.inner.iterations,
                cg_iters: est.cg.iterations,
                gradient: est.grad,
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let errors: Vec<f64> = entries.iter().map(|e| e.error).collect();
    Ok(GradcheckReport {
        problem: problem.name().to_string(),
        slope: log_log_slope(eps_list, &errors),
        lambda,
        fd_step,
        fd_gradient: fd,
        entries,
    })
}
