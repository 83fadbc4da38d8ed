//! Concrete bilevel problems.

mod kernel_ridge;
mod logistic;
mod multinomial;
mod toy;

pub use kernel_ridge::{KernelDistance, KernelRidgeProblem};
pub use logistic::LogisticL2Problem;
pub use multinomial::MultiFeatureRegLogisticProblem;
pub use toy::{AnalyticToyProblem, ToyReference};

/// Logistic loss `ψ(t) = log(1 + e^{−t})`, branching at 0 to avoid overflow.
#[inline]
pub fn logistic_loss(t: f64) -> f64 {
    if t > 0.0 {
        (-t).exp().ln_1p()
    } else {
        -t + t.exp().ln_1p()
    }
}

/// `ψ′(t) = −1 / (1 + e^t)`
#[inline]
pub fn logistic_loss_deriv(t: f64) -> f64 {
    if t > 0.0 {
        let e = (-t).exp();
        -e / (1.0 + e)
    } else {
        -1.0 / (1.0 + t.exp())
    }
}

/// `ψ″(t) = σ(t)·σ(−t)`
#[inline]
pub fn logistic_loss_second(t: f64) -> f64 {
    let e = (-t.abs()).exp();
    e / ((1.0 + e) * (1.0 + e))
}
