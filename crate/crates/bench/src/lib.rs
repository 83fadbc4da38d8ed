//! Fixed synthetic instances shared by the benchmarks in `benches/`.

use hoag_core::dataio::{split_three, synth_classification, synth_regression, Dataset};
use hoag_core::problems::{KernelDistance, KernelRidgeProblem, LogisticL2Problem};

fn train_test(d: &Dataset, seed: u64) -> (Dataset, Dataset) {
    let (train, test, _) = split_three(d, seed).expect("n >= 3").apply(d);
    (train, test)
}

pub fn logistic(n: usize, p: usize) -> LogisticL2Problem {
    let (train, test) = train_test(&synth_classification(n, p, 7), 7);
    LogisticL2Problem::new(&train, &test).expect("valid synthetic logistic data")
}

pub fn kernel_ridge(n: usize, p: usize) -> KernelRidgeProblem {
    let (train, test) = train_test(&synth_regression(n, p, 0.5, 3), 3);
    KernelRidgeProblem::new(&train, &test, KernelDistance::Euclidean).expect("valid synthetic regression data")
}
