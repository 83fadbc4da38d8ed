use crate::error::{Error, Result};
use crate::linalg::{dot, norm, sub};
use crate::problem::BilevelProblem;

/// `h(x, λ) = ½‖x − c‖² + ½e^λ‖x‖²` and `g(x, λ) = ½‖x − d‖²`, for which
/// `X(λ) = c / (1 + e^λ)` in closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticToyProblem {
    c: Vec<f64>,
    d: Vec<f64>,
}

/// Closed-form solution, objective and hypergradient of the toy at one `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyReference {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad: f64,
}

impl AnalyticToyProblem {
    pub fn new(c: Vec<f64>, d: Vec<f64>) -> Result<Self> {
        Error::check_dim("toy targets", c.len(), d.len())?;
        if c.is_empty() {
            return Err(Error::InvalidConfig("toy problem needs p >= 1".into()));
        }
        Ok(Self { c, d })
    }

    pub fn scalar(c: f64, d: f64) -> Self {
        Self { c: vec![c], d: vec![d] }
    }

    /// `X(λ)`, `f(λ)` and `f′(λ)` evaluated from their closed forms.
    pub fn reference(&self, lambda: f64) -> ToyReference {
        let e = lambda.exp();
        let x: Vec<f64> = self.c.iter().map(|c| c / (1.0 + e)).collect();
        let resid = sub(&x, &self.d);
        let dx: Vec<f64> = self.c.iter().map(|c| -c * e / ((1.0 + e) * (1.0 + e))).collect();
        ToyReference {
            value: 0.5 * dot(&resid, &resid),
            grad: dot(&resid, &dx),
            x,
        }
    }
}

impl BilevelProblem for AnalyticToyProblem {
    fn name(&self) -> &str {
        "toy"
    }

    fn n_params(&self) -> usize {
        self.c.len()
    }

    fn n_hyper(&self) -> usize {
        1
    }

    fn inner_loss(&self, x: &[f64], lambda: &[f64]) -> f64 {
        let r = sub(x, &self.c);
        0.5 * dot(&r, &r) + 0.5 * lambda[0].exp() * dot(x, x)
    }

    fn inner_grad(&self, x: &[f64], lambda: &[f64]) -> Vec<f64> {
        let e = lambda[0].exp();
        x.iter().zip(&self.c).map(|(xi, ci)| xi - ci + e * xi).collect()
    }

    fn hessian_vec(&self, _x: &[f64], lambda: &[f64], v: &[f64]) -> Vec<f64> {
        let a = 1.0 + lambda[0].exp();
        v.iter().map(|vi| a * vi).collect()
    }

    fn cross_vec(&self, x: &[f64], lambda: &[f64], v: &[f64]) -> Vec<f64> {
        vec![lambda[0].exp() * dot(x, v)]
    }

    fn outer_loss(&self, x: &[f64], _lambda: &[f64]) -> f64 {
        let r = sub(x, &self.d);
        0.5 * dot(&r, &r)
    }

    fn outer_grad_params(&self, x: &[f64], _lambda: &[f64]) -> Vec<f64> {
        sub(x, &self.d)
    }

    fn outer_grad_hyper(&self, _x: &[f64], _lambda: &[f64]) -> Vec<f64> {
        vec![0.0]
    }

    fn strong_convexity(&self, lambda: &[f64]) -> f64 {
        1.0 + lambda[0].exp()
    }

    /// Iterates satisfy `‖x‖ ≤ ‖c‖`, so `‖∇₁g‖ ≤ ‖c‖ + ‖d‖` on the region of interest.
    fn outer_lipschitz(&self) -> f64 {
        norm(&self.c) + norm(&self.d)
    }

    fn outer_smoothness(&self) -> Option<f64> {
        Some(1.0)
    }

    fn inner_is_quadratic(&self) -> bool {
        true
    }
}
