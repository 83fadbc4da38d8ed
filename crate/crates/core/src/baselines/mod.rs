//! Comparison methods sharing the [`TraceRecord`](crate::TraceRecord) schema.

mod iterdiff;
mod search;

pub use iterdiff::{
    inner_step_size, iterdiff_gradient, iterdiff_run, IterdiffConfig, IterdiffEstimate, IterdiffRun,
    POWER_ITERATIONS,
};
pub use search::{grid_points, grid_search, random_search, EvaluationBudget, SearchResult, DEFAULT_GRID_POINTS};
