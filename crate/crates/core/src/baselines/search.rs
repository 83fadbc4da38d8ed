use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::hoag::evaluate_outer;
use crate::problem::BilevelProblem;
use crate::schedule::TOLERANCE_FLOOR;
use crate::solvers::DEFAULT_MAX_ITERS;
use crate::trace::TraceRecord;

pub const DEFAULT_GRID_POINTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvaluationBudget {
    pub max_evaluations: usize,
    /// Inner-solver iteration cap per evaluation of `f`.
    pub inner_max_iters: usize,
}

impl EvaluationBudget {
    pub fn new(max_evaluations: usize) -> Self {
        Self {
            max_evaluations,
            inner_max_iters: DEFAULT_MAX_ITERS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub best_lambda: Vec<f64>,
    pub best_value: f64,
    pub trace: Vec<TraceRecord>,
}

/// Equally spaced points per coordinate, Cartesian product in lexicographic
/// order (first coordinate slowest).
pub fn grid_points(domain: &BoxDomain, points_per_dim: usize) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = domain
        .lower()
        .iter()
        .zip(domain.upper())
        .map(|(lo, hi)| {
            (0..points_per_dim)
                .map(|i| lo + (hi - lo) * i as f64 / (points_per_dim - 1) as f64)
                .collect()
        })
        .collect();
    let mut points = vec![Vec::with_capacity(axes.len())];
    for axis in &axes {
        points = points
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    points
}

/// Evaluates `f` at every candidate in parallel, then assembles the trace in
/// candidate order. Ties keep the earliest candidate.
fn evaluate_all<P: BilevelProblem + ?Sized>(
    problem: &P,
    candidates: Vec<Vec<f64>>,
    inner_max_iters: usize,
) -> Result<SearchResult> {
    if candidates.is_empty() {
        return Err(Error::InvalidConfig("search needs at least one evaluation".into()));
    }
    let x0 = vec![0.0; problem.n_params()];
    let evaluations: Vec<(f64, usize, f64, f64)> = candidates
        .par_iter()
        .map(|lambda| {
            let start = Instant::now();
            let (value, report) = evaluate_outer(problem, lambda, &x0, inner_max_iters)?;
            Ok((value, report.iterations, report.achieved_bound, start.elapsed().as_secs_f64()))
        })
        .collect::<Result<_>>()?;

    let mut trace = Vec::with_capacity(candidates.len());
    let (mut inner_iters, mut wall_time) = (0, 0.0);
    let mut best = 0;
    for (i, (lambda, (value, iters, bound, secs))) in candidates.iter().zip(&evaluations).enumerate() {
        inner_iters += iters;
        wall_time += secs;
        if *value < evaluations[best].0 {
            best = i;
        }
        trace.push(TraceRecord {
            k: i + 1,
            lambda: lambda.clone(),
            epsilon: TOLERANCE_FLOOR,
            outer_value: *value,
            grad_norm: 0.0,
            step_size: 0.0,
            inner_iters,
            cg_iters: 0,
            inner_bound: *bound,
            wall_time,
        });
    }
    Ok(SearchResult {
        best_lambda: candidates[best].clone(),
        best_value: evaluations[best].0,
        trace,
    })
}

/// Exhaustive search over an equally spaced grid, truncated to the budget.
pub fn grid_search<P: BilevelProblem + ?Sized>(
    problem: &P,
    domain: &BoxDomain,
    points_per_dim: usize,
    budget: &EvaluationBudget,
) -> Result<SearchResult> {
    if points_per_dim < 2 {
        return Err(Error::InvalidConfig("grid search needs at least 2 points per dimension".into()));
    }
    Error::check_dim("search domain", problem.n_hyper(), domain.dim())?;
    let mut points = grid_points(domain, points_per_dim);
    points.truncate(budget.max_evaluations);
    evaluate_all(problem, points, budget.inner_max_iters)
}

/// Independent uniform samples from the box, drawn from a generator seeded
/// with `seed`.
pub fn random_search<P: BilevelProblem + ?Sized>(
    problem: &P,
    domain: &BoxDomain,
    budget: &EvaluationBudget,
    seed: u64,
) -> Result<SearchResult> {
    Error::check_dim("search domain", problem.n_hyper(), domain.dim())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..budget.max_evaluations)
        .map(|_| {
            domain
                .lower()
                .iter()
                .zip(domain.upper())
                .map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
                .collect()
        })
        .collect();
    evaluate_all(problem, samples, budget.inner_max_iters)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_layout() {
        let d = BoxDomain::new(vec![0.0, -1.0], vec![1.0, 1.0]).unwrap();
        let pts = grid_points(&d, 3);
        assert_eq!(pts.len(), 9);
        assert_eq!(pts[0], vec![0.0, -1.0]);
        assert_eq!(pts[1], vec![0.0, 0.0]);
        assert_eq!(pts[8], vec![1.0, 1.0]);
        let default = grid_points(&BoxDomain::symmetric(1), DEFAULT_GRID_POINTS);
        assert_eq!(default.len(), 10);
        assert_eq!((default[0][0], default[9][0]), (-12.0, 12.0));
    }
}
