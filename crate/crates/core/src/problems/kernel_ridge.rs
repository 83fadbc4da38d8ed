use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{distance, dot, norm};
use crate::params::HyperParams;
use crate::problem::BilevelProblem;

/// Distance fed to the kernel `k(a, a') = exp(−γ · dist(a, a'))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelDistance {
    /// `‖a − a'‖`
    #[default]
    Euclidean,
    /// `‖a − a'‖²`, the Gaussian kernel.
    SquaredEuclidean,
}

/// Kernel ridge regression with an RBF kernel and two hyperparameters,
/// `λ = (log γ, log regularization)`:
///
/// ```text
/// h(x, λ) = ½xᵀ(K_train + e^{λ₂}I)x − bᵀx
/// g(x, λ) = ‖b' − K_test x‖²
/// ```
///
/// so that `∇₁h = 0` is the usual linear system `(K + e^{λ₂}I)x = b`.
#[derive(Debug, Clone)]
pub struct KernelRidgeProblem {
    n_train: usize,
    n_test: usize,
    n_features: usize,
    /// `n_train × n_train`, row-major
    dist_train: Vec<f64>,
    /// `n_test × n_train`, row-major
    dist_test: Vec<f64>,
    train_y: Vec<f64>,
    test_y: Vec<f64>,
    kernel: KernelDistance,
}

fn pairwise(a: &Dataset, b: &Dataset, kernel: KernelDistance) -> Vec<f64> {
    let rows_a: Vec<Vec<f64>> = (0..a.n_samples()).map(|i| a.features.dense_row(i)).collect();
    let rows_b: Vec<Vec<f64>> = (0..b.n_samples()).map(|i| b.features.dense_row(i)).collect();
    let mut out = Vec::with_capacity(rows_a.len() * rows_b.len());
    for ra in &rows_a {
        for rb in &rows_b {
            let d = distance(ra, rb);
            out.push(match kernel {
                KernelDistance::Euclidean => d,
                KernelDistance::SquaredEuclidean => d * d,
            });
        }
    }
    out
}

impl KernelRidgeProblem {
    pub fn new(train: &Dataset, test: &Dataset, kernel: KernelDistance) -> Result<Self> {
        Error::check_dim("test feature count", train.feature_count(), test.feature_count())?;
        if train.n_samples() == 0 {
            return Err(Error::InvalidConfig("kernel ridge needs training samples".into()));
        }
        let mut dist_train = pairwise(train, train, kernel);
        let n = train.n_samples();
        for i in 0..n {
            dist_train[i * n + i] = 0.0;
        }
        Ok(Self {
            n_train: n,
            n_test: test.n_samples(),
            n_features: train.feature_count(),
            dist_train,
            dist_test: pairwise(test, train, kernel),
            train_y: train.targets.clone(),
            test_y: test.targets.clone(),
            kernel,
        })
    }

    pub fn kernel(&self) -> KernelDistance {
        self.kernel
    }

    /// Materialized `K_train(γ)`, row-major.
    pub fn train_kernel(&self, lambda: &[f64]) -> Vec<f64> {
        let gamma = lambda[0].exp();
        self.dist_train.iter().map(|d| (-gamma * d).exp()).collect()
    }

    /// `Σ_j exp(−γ D_ij) · w_ij(D_ij) · v_j` for each row `i`.
    fn kernel_apply(dist: &[f64], cols: usize, gamma: f64, v: &[f64], deriv: bool) -> Vec<f64> {
        dist.chunks(cols)
            .map(|row| {
                row.iter()
                    .zip(v)
                    .map(|(d, vj)| {
                        let k = (-gamma * d).exp();
                        if deriv {
                            -gamma * d * k * vj
                        } else {
                            k * vj
                        }
                    })
                    .sum()
            })
            .collect()
    }

    fn kernel_apply_t(dist: &[f64], cols: usize, gamma: f64, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; cols];
        for (row, ui) in dist.chunks(cols).zip(u) {
            for (o, d) in out.iter_mut().zip(row) {
                *o += (-gamma * d).exp() * ui;
            }
        }
        out
    }

    fn test_residual(&self, x: &[f64], gamma: f64) -> Vec<f64> {
        let kx = Self::kernel_apply(&self.dist_test, self.n_train, gamma, x, false);
        self.test_y.iter().zip(&kx).map(|(b, k)| b - k).collect()
    }
}

impl BilevelProblem for KernelRidgeProblem {
    fn name(&self) -> &str {
        "kernel_ridge"
    }

    fn n_params(&self) -> usize {
        self.n_train
    }

    fn n_hyper(&self) -> usize {
        2
    }

    fn inner_loss(&self, x: &[f64], lambda: &[f64]) -> f64 {
        let hx = self.hessian_vec(x, lambda, x);
        0.5 * dot(x, &hx) - dot(&self.train_y, x)
    }

    fn inner_grad(&self, x: &[f64], lambda: &[f64]) -> Vec<f64> {
        let mut g = self.hessian_vec(x, lambda, x);
        for (gi, b) in g.iter_mut().zip(&self.train_y) {
            *gi -= b;
        }
        g
    }

    fn hessian_vec(&self, _x: &[f64], lambda: &[f64], v: &[f64]) -> Vec<f64> {
        let mut out = Self::kernel_apply(&self.dist_train, self.n_train, lambda[0].exp(), v, false);
        crate::linalg::axpy(lambda[1].exp(), v, &mut out);
        out
    }

    fn cross_vec(&self, x: &[f64], lambda: &[f64], v: &[f64]) -> Vec<f64> {
        let dk_x = Self::kernel_apply(&self.dist_train, self.n_train, lambda[0].exp(), x, true);
        vec![dot(&dk_x, v), lambda[1].exp() * dot(x, v)]
    }

    fn outer_loss(&self, x: &[f64], lambda: &[f64]) -> f64 {
        let r = self.test_residual(x, lambda[0].exp());
        dot(&r, &r)
    }

    fn outer_grad_params(&self, x: &[f64], lambda: &[f64]) -> Vec<f64> {
        let gamma = lambda[0].exp();
        let r = self.test_residual(x, gamma);
        Self::kernel_apply_t(&self.dist_test, self.n_train, gamma, &r)
            .into_iter()
            .map(|v| -2.0 * v)
            .collect()
    }

    /// The test kernel depends on `λ₁` directly, not only through `x`.
    fn outer_grad_hyper(&self, x: &[f64], lambda: &[f64]) -> Vec<f64> {
        let gamma = lambda[0].exp();
        let r = self.test_residual(x, gamma);
        let dk_x = Self::kernel_apply(&self.dist_test, self.n_train, gamma, x, true);
        vec![-2.0 * dot(&r, &dk_x), 0.0]
    }

    fn strong_convexity(&self, lambda: &[f64]) -> f64 {
        lambda[1].exp()
    }

    /// Gradient bound at `x = 0`: `‖2K_testᵀb'‖ ≤ 2·√(mn)·‖b'‖` since kernel
    /// entries lie in `(0, 1]`.
    fn outer_lipschitz(&self) -> f64 {
        2.0 * ((self.n_test * self.n_train) as f64).sqrt() * norm(&self.test_y)
    }

    /// `‖2K_testᵀK_test‖ ≤ 2‖K_test‖²_F ≤ 2mn`.
    fn outer_smoothness(&self) -> Option<f64> {
        Some(2.0 * (self.n_test * self.n_train) as f64)
    }

    fn inner_is_quadratic(&self) -> bool {
        true
    }

    fn default_lambda0(&self) -> HyperParams {
        HyperParams::from_vec_unchecked(vec![-(self.n_features as f64).ln(), 0.0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::synth_regression;

    fn problem() -> KernelRidgeProblem {
        let d = synth_regression(12, 3, 0.1, 2);
        let (train, test) = (d.subset(&(0..8).collect::<Vec<_>>()), d.subset(&[8, 9, 10, 11]));
        KernelRidgeProblem::new(&train, &test, KernelDistance::Euclidean).unwrap()
    }

    #[test]
    fn kernel_diagonal_is_one() {
        let p = problem();
        for lam in [-3.0, 0.0, 2.0] {
            let k = p.train_kernel(&[lam, 0.0]);
            for i in 0..8 {
                assert_eq!(k[i * 8 + i], 1.0);
            }
        }
        assert!(p.dist_train.iter().all(|d| *d >= 0.0));
    }

    #[test]
    fn default_start_uses_feature_count() {
        let p = problem();
        assert_eq!(p.default_lambda0().as_slice(), &[-(3f64.ln()), 0.0]);
        assert_eq!(p.strong_convexity(&[0.0, 1.0]), 1f64.exp());
    }

    #[test]
    fn heavy_regularization_shrinks_towards_scaled_targets() {
        let p = problem();
        let lam = [0.0, 11.0];
        let report = crate::solvers::inner_solve(&p, &lam, &[0.0; 8], 1e-12, 100).unwrap();
        let scale = (-11f64).exp();
        for (x, b) in report.x.iter().zip(&p.train_y) {
            assert!((x - scale * b).abs() <= 1e-3 * scale * b.abs().max(1.0) * 10.0);
        }
    }
}
