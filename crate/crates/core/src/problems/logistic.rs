use crate::dataio::{Dataset, Features};
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::problem::BilevelProblem;
use crate::problems::{logistic_loss, logistic_loss_deriv, logistic_loss_second};

/// ℓ2-regularized logistic regression with one regularization hyperparameter:
///
/// ```text
/// h(x, λ) = Σ_i ψ(b_i a_iᵀx) + e^λ‖x‖²    (train set)
/// g(x, λ) = Σ_i ψ(b'_i a'_iᵀx)            (test set)
/// ```
#[derive(Debug, Clone)]
pub struct LogisticL2Problem {
    train_x: Features,
    train_y: Vec<f64>,
    test_x: Features,
    test_y: Vec<f64>,
    lipschitz: f64,
    smoothness: f64,
}

impl LogisticL2Problem {
    pub fn new(train: &Dataset, test: &Dataset) -> Result<Self> {
        train.check_binary_labels()?;
        test.check_binary_labels()?;
        Error::check_dim("test feature count", train.feature_count(), test.feature_count())?;
        if train.feature_count() == 0 {
            return Err(Error::InvalidConfig("logistic problem needs at least one feature".into()));
        }
        let norms: Vec<f64> = (0..test.n_samples()).map(|i| test.features.row_norm(i)).collect();
        let lipschitz = norms.iter().sum();
        let smoothness = 0.25 * norms.iter().map(|r| r * r).sum::<f64>();
        Ok(Self {
            train_x: train.features.clone(),
            train_y: train.targets.clone(),
            test_x: test.features.clone(),
            test_y: test.targets.clone(),
            lipschitz,
            smoothness,
        })
    }

    fn margins(features: &Features, labels: &[f64], x: &[f64]) -> Vec<f64> {
        labels
            .iter()
            .enumerate()
            .map(|(i, b)| b * features.row_dot(i, x))
            .collect()
    }

    fn loss_grad_on(features: &Features, labels: &[f64], x: &[f64]) -> (f64, Vec<f64>) {
        let margins = Self::margins(features, labels, x);
        let loss = margins.iter().map(|&m| logistic_loss(m)).sum();
        let weights: Vec<f64> = margins
            .iter()
            .zip(labels)
            .map(|(&m, b)| b * logistic_loss_deriv(m))
            .collect();
        (loss, features.matvec_t(&weights))
    }
}

impl BilevelProblem for LogisticL2Problem {
    fn name(&self) -> &str {
        "logistic"
    }

    fn n_params(&self) -> usize {
        self.train_x.n_cols()
    }

    fn n_hyper(&self) -> usize {
        1
    }

    fn inner_loss(&self, x: &[f64], lambda: &[f64]) -> f64 {
        let data: f64 = Self::margins(&self.train_x, &self.train_y, x)
            .into_iter()
            .map(logistic_loss)
            .sum();
        data + lambda[0].exp() * dot(x, x)
    }

    fn inner_grad(&self, x: &[f64], lambda: &[f64]) -> Vec<f64> {
        self.inner_loss_grad(x, lambda).1
    }

    fn inner_loss_grad(&self, x: &[f64], lambda: &[f64]) -> (f64, Vec<f64>) {
        let e = lambda[0].exp();
        let (loss, mut grad) = Self::loss_grad_on(&self.train_x, &self.train_y, x);
        crate::linalg::axpy(2.0 * e, x, &mut grad);
        (loss + e * dot(x, x), grad)
    }

    fn hessian_vec(&self, x: &[f64], lambda: &[f64], v: &[f64]) -> Vec<f64> {
        let margins = Self::margins(&self.train_x, &self.train_y, x);
        let av = self.train_x.matvec(v);
        let weighted: Vec<f64> = margins
            .iter()
            .zip(&av)
            .map(|(&m, a)| logistic_loss_second(m) * a)
            .collect();
        let mut out = self.train_x.matvec_t(&weighted);
        crate::linalg::axpy(2.0 * lambda[0].exp(), v, &mut out);
        out
    }

    fn cross_vec(&self, x: &[f64], lambda: &[f64], v: &[f64]) -> Vec<f64> {
        vec![2.0 * lambda[0].exp() * dot(x, v)]
    }

    fn outer_loss(&self, x: &[f64], _lambda: &[f64]) -> f64 {
        Self::margins(&self.test_x, &self.test_y, x)
            .into_iter()
            .map(logistic_loss)
            .sum()
    }

    fn outer_grad_params(&self, x: &[f64], _lambda: &[f64]) -> Vec<f64> {
        Self::loss_grad_on(&self.test_x, &self.test_y, x).1
    }

    fn outer_grad_hyper(&self, _x: &[f64], _lambda: &[f64]) -> Vec<f64> {
        vec![0.0]
    }

    fn strong_convexity(&self, lambda: &[f64]) -> f64 {
        2.0 * lambda[0].exp()
    }

    /// `|ψ′| ≤ 1`, so `‖∇₁g‖ ≤ Σ_i ‖a'_i‖`.
    fn outer_lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// `ψ″ ≤ ¼`, so `∇₁²g ⪯ ¼·A'ᵀA'` and `‖A'‖² ≤ Σ_i ‖a'_i‖²`.
    fn outer_smoothness(&self) -> Option<f64> {
        Some(self.smoothness)
    }
}
