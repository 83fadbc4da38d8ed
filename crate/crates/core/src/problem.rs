//! The oracle interface of a bilevel hyperparameter problem.
//!
//! ```text
//! min_{λ ∈ D}  f(λ) = g(X(λ), λ)     with   X(λ) = argmin_x h(x, λ)
//! ```
//!
//! Every oracle is evaluated at a given `(x, λ)` and must be pure: a single
//! problem instance may serve several concurrent runs.

use crate::params::HyperParams;

pub trait BilevelProblem: Sync {
    /// Short identifier used in traces and reports.
    fn name(&self) -> &str;

    /// Dimension `p` of the inner variable.
    fn n_params(&self) -> usize;

    /// Dimension `s` of the hyperparameters.
    fn n_hyper(&self) -> usize;

    /// `h(x, λ)`
    fn inner_loss(&self, x: &[f64], lambda: &[f64]) -> f64;

    /// `∇₁h(x, λ)`
    fn inner_grad(&self, x: &[f64], lambda: &[f64]) -> Vec<f64>;

    /// `h` and `∇₁h` together; override when they share work.
    fn inner_loss_grad(&self, x: &[f64], lambda: &[f64]) -> (f64, Vec<f64>) {
        (self.inner_loss(x, lambda), self.inner_grad(x, lambda))
    }

    /// `∇₁²h(x, λ) · v`, symmetric and linear in `v`.
    fn hessian_vec(&self, x: &[f64], lambda: &[f64], v: &[f64]) -> Vec<f64>;

    /// `(∇²₁,₂h(x, λ))ᵀ · v`, a vector of length `s`.
    fn cross_vec(&self, x: &[f64], lambda: &[f64], v: &[f64]) -> Vec<f64>;

    /// `g(x, λ)`
    fn outer_loss(&self, x: &[f64], lambda: &[f64]) -> f64;

    /// `∇₁g(x, λ)`
    fn outer_grad_params(&self, x: &[f64], lambda: &[f64]) -> Vec<f64>;

    /// `∇₂g(x, λ)`
    fn outer_grad_hyper(&self, x: &[f64], lambda: &[f64]) -> Vec<f64>;

    /// Lower bound `μ(λ) > 0` on the spectrum of `∇₁²h(·, λ)`.
    fn strong_convexity(&self, lambda: &[f64]) -> f64;

    /// Lipschitz constant `C` of `g` in `x`, computed from the data.
    fn outer_lipschitz(&self) -> f64;

    /// Smoothness constant `L_g` of `g` in `x`, when one is known. Together with
    /// `∇₁g` it gives the local bound `|g(x) − g(y)| ≤ ‖∇₁g(x)‖·d + L_g·d²/2`
    /// for `‖x − y‖ ≤ d`, usually far tighter than `C·d`.
    fn outer_smoothness(&self) -> Option<f64> {
        None
    }

    /// True when `h(·, λ)` is a quadratic `½xᵀHx − bᵀx`. The inner solve is then
    /// routed to conjugate gradient on `Hx = b` with `b = −∇₁h(0, λ)`.
    fn inner_is_quadratic(&self) -> bool {
        false
    }

    /// Per-coordinate starting point: 0 for regularization coordinates,
    /// `−log(n_features)` for kernel widths.
    fn default_lambda0(&self) -> HyperParams {
        HyperParams::zeros(self.n_hyper())
    }
}

impl<P: BilevelProblem + ?Sized> BilevelProblem for &P {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn n_params(&self) -> usize {
        (**self).n_params()
    }
    fn n_hyper(&self) -> usize {
        (**self).n_hyper()
    }
    fn inner_loss(&self, x: &[f64], lambda: &[f64]) -> f64 {
        (**self).inner_loss(x, lambda)
    }
    fn inner_grad(&self, x: &[f64], lambda: &[f64]) -> Vec<f64> {
        (**self).inner_grad(x, lambda)
    }
    fn inner_loss_grad(&self, x: &[f64], lambda: &[f64]) -> (f64, Vec<f64>) {
        (**self).inner_loss_grad(x, lambda)
    }
    fn hessian_vec(&self, x: &[f64], lambda: &[f64], v: &[f64]) -> Vec<f64> {
        (**self).hessian_vec(x, lambda, v)
    }
    fn cross_vec(&self, x: &[f64], lambda: &[f64], v: &[f64]) -> Vec<f64> {
        (**self).cross_vec(x, lambda, v)
    }
    fn outer_loss(&self, x: &[f64], lambda: &[f64]) -> f64 {
        (**self).outer_loss(x, lambda)
    }
    fn outer_grad_params(&self, x: &[f64], lambda: &[f64]) -> Vec<f64> {
        (**self).outer_grad_params(x, lambda)
    }
    fn outer_grad_hyper(&self, x: &[f64], lambda: &[f64]) -> Vec<f64> {
        (**self).outer_grad_hyper(x, lambda)
    }
    fn strong_convexity(&self, lambda: &[f64]) -> f64 {
        (**self).strong_convexity(lambda)
    }
    fn outer_lipschitz(&self) -> f64 {
        (**self).outer_lipschitz()
    }
    fn outer_smoothness(&self) -> Option<f64> {
        (**self).outer_smoothness()
    }
    fn inner_is_quadratic(&self) -> bool {
        (**self).inner_is_quadratic()
    }
    fn default_lambda0(&self) -> HyperParams {
        (**self).default_lambda0()
    }
}
