//! Seeded synthetic datasets standing in for the text, biomedical and digit
//! benchmarks at desk scale.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataio::matrix::{DenseMatrix, Features};
use crate::dataio::Dataset;

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn dense(n: usize, p: usize, data: Vec<f64>, targets: Vec<f64>) -> Dataset {
    let features = DenseMatrix::new(n, p, data).expect("consistent synthetic storage");
    Dataset::new(Features::Dense(features), targets).expect("consistent synthetic targets")
}

/// Two unit-covariance Gaussian blobs with means `±0.5·𝟙`, labels `±1`.
pub fn synth_classification(n: usize, p: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * p);
    let mut targets = Vec::with_capacity(n);
    for _ in 0..n {
        let label = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        targets.push(label);
        data.extend((0..p).map(|_| 0.5 * label + gaussian(&mut rng)));
    }
    dense(n, p, data, targets)
}

/// Standard normal features, `y = A·w* + noise·N(0, 1)` with `w*` drawn once.
pub fn synth_regression(n: usize, p: usize, noise: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..p).map(|_| gaussian(&mut rng)).collect();
    let data: Vec<f64> = (0..n * p).map(|_| gaussian(&mut rng)).collect();
    let targets = data
        .chunks(p.max(1))
        .take(n)
        .map(|row| crate::linalg::dot(&row[..p], &w) + noise * gaussian(&mut rng))
        .collect();
    dense(n, p, data, targets)
}

/// The regression ground truth `w*` of [`synth_regression`] for a seed.
pub fn regression_weights(p: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..p).map(|_| gaussian(&mut rng)).collect()
}

/// `K` unit-covariance blobs with standard normal centers; labels `1..=K`.
pub fn synth_multiclass(n: usize, p: usize, n_classes: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..n_classes)
        .map(|_| (0..p).map(|_| gaussian(&mut rng)).collect())
        .collect();
    let mut data = Vec::with_capacity(n * p);
    let mut targets = Vec::with_capacity(n);
    for _ in 0..n {
        let c = rng.random_range(0..n_classes);
        targets.push((c + 1) as f64);
        data.extend(centers[c].iter().map(|m| m + gaussian(&mut rng)));
    }
    dense(n, p, data, targets)
}
