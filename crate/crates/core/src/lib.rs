//! Gradient-based hyperparameter optimization with approximate hypergradients.
//!
//! The outer problem minimizes a validation loss `g(X(λ), λ)` over a box of
//! hyperparameters, where `X(λ)` minimizes a strongly convex training objective
//! `h(·, λ)`. Hypergradients come from implicit differentiation: the inner
//! problem and one linear system are solved only up to a tolerance `ε_k` that
//! decreases along the outer iterations.
//!
//! Crate layout:
//!
//! * [`problem`], [`params`], [`domain`], [`schedule`], [`trace`]: shared types
//!   and the [`BilevelProblem`] oracle interface.
//! * [`solvers`]: L-BFGS inner solver and matrix-free conjugate gradient.
//! * [`hoag`]: the outer driver with its adaptive step size.
//! * [`problems`]: analytic toy, ℓ2-logistic, RBF kernel ridge and the
//!   per-coordinate regularized multinomial model.
//! * [`baselines`]: grid search, random search and unrolled differentiation.
//! * [`dataio`]: libsvm/CSV parsing, synthetic data and hold-out splits.

pub mod baselines;
pub mod check;
pub mod dataio;
pub mod domain;
pub mod error;
pub mod hoag;
pub mod linalg;
pub mod params;
pub mod problem;
pub mod problems;
pub mod schedule;
pub mod solvers;
pub mod trace;

pub use domain::BoxDomain;
pub use error::{Error, Result};
pub use hoag::{AdaptiveStepConfig, HoagConfig, HoagState};
pub use params::{HyperParams, ModelParams};
pub use problem::BilevelProblem;
pub use schedule::{ScheduleKind, ToleranceSchedule};
pub use trace::TraceRecord;
