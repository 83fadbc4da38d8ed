use crate::dataio::{Dataset, Features};
use crate::error::{Error, Result};
use crate::problem::BilevelProblem;

/// Multinomial logistic regression with one regularization hyperparameter per
/// weight coordinate:
///
/// ```text
/// h(x, λ) = Σ_i ψ_K(a_iᵀX, y_i) + ½ Σ_j e^{λ_j} x_j²
/// g(x, λ) = Σ_i ψ_K(a'_iᵀX, y'_i)
/// ```
///
/// `X` is the `p × K` weight matrix stored row-major in `x`, so coordinate
/// `j·K + c` is feature `j`, class `c`, and `λ` has the same layout.
#[derive(Debug, Clone)]
pub struct MultiFeatureRegLogisticProblem {
    n_classes: usize,
    train_x: Features,
    train_y: Vec<usize>,
    test_x: Features,
    test_y: Vec<usize>,
    lipschitz: f64,
    smoothness: f64,
}

/// Class scores `z_c = Σ_j a_ij X[j, c]` of sample `i`.
fn scores(features: &Features, i: usize, x: &[f64], k: usize) -> Vec<f64> {
    let mut z = vec![0.0; k];
    features.for_each_in_row(i, |j, a| {
        for (zc, xc) in z.iter_mut().zip(&x[j * k..(j + 1) * k]) {
            *zc += a * xc;
        }
    });
    z
}

/// Softmax probabilities and `log Σ exp z` with max subtraction.
fn softmax(z: &[f64]) -> (Vec<f64>, f64) {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let sum: f64 = exps.iter().sum();
    (exps.iter().map(|e| e / sum).collect(), m + sum.ln())
}

impl MultiFeatureRegLogisticProblem {
    pub fn new(train: &Dataset, test: &Dataset, n_classes: usize) -> Result<Self> {
        if n_classes < 2 {
            return Err(Error::InvalidConfig("multinomial model needs at least 2 classes".into()));
        }
        Error::check_dim("test feature count", train.feature_count(), test.feature_count())?;
        let norms: Vec<f64> = (0..test.n_samples()).map(|i| test.features.row_norm(i)).collect();
        let lipschitz = std::f64::consts::SQRT_2 * norms.iter().sum::<f64>();
        let smoothness = 0.5 * norms.iter().map(|r| r * r).sum::<f64>();
        Ok(Self {
            n_classes,
            train_y: train.class_indices(n_classes)?,
            test_y: test.class_indices(n_classes)?,
            train_x: train.features.clone(),
            test_x: test.features.clone(),
            lipschitz,
            smoothness,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Per-sample losses `ψ_K` on the training set.
    pub fn sample_losses(&self, x: &[f64]) -> Vec<f64> {
        (0..self.train_y.len())
            .map(|i| {
                let z = scores(&self.train_x, i, x, self.n_classes);
                softmax(&z).1 - z[self.train_y[i]]
            })
            .collect()
    }

    fn loss_grad_on(&self, features: &Features, labels: &[usize], x: &[f64]) -> (f64, Vec<f64>) {
        let k = self.n_classes;
        let mut grad = vec![0.0; x.len()];
        let mut loss = 0.0;
        for (i, &y) in labels.iter().enumerate() {
            let z = scores(features, i, x, k);
            let (mut prob, lse) = softmax(&z);
            loss += lse - z[y];
            prob[y] -= 1.0;
            features.for_each_in_row(i, |j, a| {
                for (g, pc) in grad[j * k..(j + 1) * k].iter_mut().zip(&prob) {
                    *g += a * pc;
                }
            });
        }
        (loss, grad)
    }

    fn penalty(x: &[f64], lambda: &[f64]) -> f64 {
        0.5 * x.iter().zip(lambda).map(|(xi, l)| l.exp() * xi * xi).sum::<f64>()
    }
}

impl BilevelProblem for MultiFeatureRegLogisticProblem {
    fn name(&self) -> &str {
        "multinomial"
    }

    fn n_params(&self) -> usize {
        self.train_x.n_cols() * self.n_classes
    }

    fn n_hyper(&self) -> usize {
        self.n_params()
    }

    fn inner_loss(&self, x: &[f64], lambda: &[f64]) -> f64 {
        self.sample_losses(x).iter().sum::<f64>() + Self::penalty(x, lambda)
    }

    fn inner_grad(&self, x: &[f64], lambda: &[f64]) -> Vec<f64> {
        self.inner_loss_grad(x, lambda).1
    }

    fn inner_loss_grad(&self, x: &[f64], lambda: &[f64]) -> (f64, Vec<f64>) {
        let (loss, mut grad) = self.loss_grad_on(&self.train_x, &self.train_y, x);
        for ((g, xi), l) in grad.iter_mut().zip(x).zip(lambda) {
            *g += l.exp() * xi;
        }
        (loss + Self::penalty(x, lambda), grad)
    }

    fn hessian_vec(&self, x: &[f64], lambda: &[f64], v: &[f64]) -> Vec<f64> {
        let k = self.n_classes;
        let mut out: Vec<f64> = v.iter().zip(lambda).map(|(vi, l)| l.exp() * vi).collect();
        for i in 0..self.train_y.len() {
            let (prob, _) = softmax(&scores(&self.train_x, i, x, k));
            let u = scores(&self.train_x, i, v, k);
            let pu = crate::linalg::dot(&prob, &u);
            let w: Vec<f64> = prob.iter().zip(&u).map(|(p, ui)| p * (ui - pu)).collect();
            self.train_x.for_each_in_row(i, |j, a| {
                for (o, wc) in out[j * k..(j + 1) * k].iter_mut().zip(&w) {
                    *o += a * wc;
                }
            });
        }
        out
    }

    /// `∇²₁,₂h` is diagonal with entries `e^{λ_j} x_j`.
    fn cross_vec(&self, x: &[f64], lambda: &[f64], v: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(lambda)
            .zip(v)
            .map(|((xi, l), vi)| l.exp() * xi * vi)
            .collect()
    }

    fn outer_loss(&self, x: &[f64], _lambda: &[f64]) -> f64 {
        self.loss_grad_on(&self.test_x, &self.test_y, x).0
    }

    fn outer_grad_params(&self, x: &[f64], _lambda: &[f64]) -> Vec<f64> {
        self.loss_grad_on(&self.test_x, &self.test_y, x).1
    }

    fn outer_grad_hyper(&self, x: &[f64], _lambda: &[f64]) -> Vec<f64> {
        vec![0.0; x.len()]
    }

    fn strong_convexity(&self, lambda: &[f64]) -> f64 {
        lambda.iter().copied().fold(f64::INFINITY, f64::min).exp()
    }

    /// `‖a ⊗ (π − e_y)‖ ≤ √2‖a‖` per test sample.
    fn outer_lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// `diag(π) − ππᵀ ⪯ ½I` per sample.
    fn outer_smoothness(&self) -> Option<f64> {
        Some(self.smoothness)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{synth_classification, synth_multiclass};
    use crate::problems::{logistic_loss, LogisticL2Problem};

    #[test]
    fn loss_at_origin_is_log_k() {
        let d = synth_multiclass(40, 4, 3, 2);
        let prob = MultiFeatureRegLogisticProblem::new(&d, &d, 3).unwrap();
        for l in prob.sample_losses(&vec![0.0; 12]) {
            assert!((l - 3f64.ln()).abs() < 1e-14);
        }
        let x: Vec<f64> = (0..12).map(|i| (i as f64 - 5.0) * 0.3).collect();
        assert!(prob.sample_losses(&x).iter().all(|&l| l >= 0.0));
    }

    #[test]
    fn two_classes_match_binary_logistic() {
        let d = synth_classification(25, 3, 4);
        // +1 ↦ class 1, −1 ↦ class 2
        let mut multi = d.clone();
        multi.targets = d.targets.iter().map(|&t| if t > 0.0 { 1.0 } else { 2.0 }).collect();
        let m = MultiFeatureRegLogisticProblem::new(&multi, &multi, 2).unwrap();
        let b = LogisticL2Problem::new(&d, &d).unwrap();
        let w = [0.4, -1.2, 0.7];
        let x: Vec<f64> = w.iter().flat_map(|&wj| [wj, 0.0]).collect();
        let expected: f64 = (0..25).map(|i| logistic_loss(d.targets[i] * d.features.row_dot(i, &w))).sum();
        assert!((m.outer_loss(&x, &[0.0; 6]) - expected).abs() < 1e-12);
        assert!((b.outer_loss(&w, &[0.0]) - expected).abs() < 1e-12);
    }

    #[test]
    fn cross_term_vanishes_at_zero_weights() {
        let d = synth_multiclass(10, 2, 3, 1);
        let prob = MultiFeatureRegLogisticProblem::new(&d, &d, 3).unwrap();
        assert_eq!(prob.cross_vec(&[0.0; 6], &[0.5; 6], &[1.0; 6]), vec![0.0; 6]);
        assert_eq!(prob.strong_convexity(&[0.0, -1.0, 2.0, 0.0, 0.0, 0.0]), (-1f64).exp());
    }
}
