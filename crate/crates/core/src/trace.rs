use serde::{Deserialize, Serialize};

/// One row of an optimization trace. Counters and `wall_time` are cumulative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: usize,
    pub lambda: Vec<f64>,
    pub epsilon: f64,
    /// `g(x_k, λ_k)` with the inexact `x_k`.
    pub outer_value: f64,
    /// Norm of the hypergradient estimate; 0 for derivative-free methods.
    pub grad_norm: f64,
    /// 0 for derivative-free methods.
    pub step_size: f64,
    pub inner_iters: usize,
    pub cg_iters: usize,
    /// Bound `μ⁻¹‖∇₁h‖` actually reached by the inner solve at `λ_k`.
    pub inner_bound: f64,
    pub wall_time: f64,
}

impl TraceRecord {
    /// Inner plus linear-system iterations, the machine-independent cost axis.
    pub fn work_units(&self) -> usize {
        self.inner_iters + self.cg_iters
    }
}
