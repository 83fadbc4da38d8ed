#![allow(dead_code)]

use hoag_core::dataio::{split_three, synth_classification, synth_multiclass, synth_regression, Dataset};
use hoag_core::problems::{KernelDistance, KernelRidgeProblem, LogisticL2Problem, MultiFeatureRegLogisticProblem};
use hoag_core::BilevelProblem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect()
}

/// Golden-section minimization of a unimodal function on `[a, b]`.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Dense solve by Gaussian elimination with partial pivoting.
pub fn gaussian_elimination(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// `MᵀM + shift·I` for a random Gaussian `M`.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize, shift: f64) -> Vec<Vec<f64>> {
    let m: Vec<Vec<f64>> = (0..n).map(|_| gaussian_vec(rng, n)).collect();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| m[k][i] * m[k][j]).sum::<f64>() + if i == j { shift } else { 0.0 })
                .collect()
        })
        .collect()
}

pub fn matvec(a: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

/// `h(x) = ½(x − x*)ᵀA(x − x*)` with `A ⪰ μI`, `g(x) = ½‖x‖²`; the
/// hyperparameter is inert. Not flagged quadratic, so L-BFGS solves it.
pub struct QuadraticProblem {
    pub a: Vec<Vec<f64>>,
    pub minimizer: Vec<f64>,
    pub mu: f64,
}

impl QuadraticProblem {
    pub fn random(seed: u64, n: usize, mu: f64) -> Self {
        let mut r = rng(seed);
        let a = random_spd(&mut r, n, mu);
        let minimizer = gaussian_vec(&mut r, n);
        Self { a, minimizer, mu }
    }

    pub fn scalar(mu: f64) -> Self {
        Self {
            a: vec![vec![mu]],
            minimizer: vec![0.0],
            mu,
        }
    }
}

impl BilevelProblem for QuadraticProblem {
    fn name(&self) -> &str {
        "quadratic"
    }
    fn n_params(&self) -> usize {
        self.minimizer.len()
    }
    fn n_hyper(&self) -> usize {
        1
    }
    fn inner_loss(&self, x: &[f64], _l: &[f64]) -> f64 {
        let r: Vec<f64> = x.iter().zip(&self.minimizer).map(|(a, b)| a - b).collect();
        0.5 * r.iter().zip(matvec(&self.a, &r)).map(|(a, b)| a * b).sum::<f64>()
    }
    fn inner_grad(&self, x: &[f64], _l: &[f64]) -> Vec<f64> {
        let r: Vec<f64> = x.iter().zip(&self.minimizer).map(|(a, b)| a - b).collect();
        matvec(&self.a, &r)
    }
    fn hessian_vec(&self, _x: &[f64], _l: &[f64], v: &[f64]) -> Vec<f64> {
        matvec(&self.a, v)
    }
    fn cross_vec(&self, _x: &[f64], _l: &[f64], _v: &[f64]) -> Vec<f64> {
        vec![0.0]
    }
    fn outer_loss(&self, x: &[f64], _l: &[f64]) -> f64 {
        0.5 * x.iter().map(|v| v * v).sum::<f64>()
    }
    fn outer_grad_params(&self, x: &[f64], _l: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
    fn outer_grad_hyper(&self, _x: &[f64], _l: &[f64]) -> Vec<f64> {
        vec![0.0]
    }
    fn strong_convexity(&self, _l: &[f64]) -> f64 {
        self.mu
    }
    fn outer_lipschitz(&self) -> f64 {
        1.0
    }
}

pub struct Splits {
    pub train: Dataset,
    pub test: Dataset,
    pub validation: Dataset,
}

pub fn split(d: &Dataset, seed: u64) -> Splits {
    let (train, test, validation) = split_three(d, seed).unwrap().apply(d);
    Splits { train, test, validation }
}

/// Synthetic logistic problem, n = 200, p = 20.
pub fn logistic_synthetic() -> (LogisticL2Problem, Splits) {
    let s = split(&synth_classification(200, 20, 7), 7);
    (LogisticL2Problem::new(&s.train, &s.test).unwrap(), s)
}

pub fn logistic_small() -> LogisticL2Problem {
    let s = split(&synth_classification(90, 5, 3), 3);
    LogisticL2Problem::new(&s.train, &s.test).unwrap()
}

pub fn kernel_ridge_synthetic(n: usize, seed: u64) -> (KernelRidgeProblem, Splits) {
    let s = split(&synth_regression(n, 5, 0.5, seed), seed);
    (KernelRidgeProblem::new(&s.train, &s.test, KernelDistance::Euclidean).unwrap(), s)
}

pub fn multinomial_synthetic() -> MultiFeatureRegLogisticProblem {
    let s = split(&synth_multiclass(90, 6, 3, 5), 5);
    MultiFeatureRegLogisticProblem::new(&s.train, &s.test, 3).unwrap()
}
