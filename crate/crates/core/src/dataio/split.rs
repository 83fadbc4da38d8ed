use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataio::Dataset;
use crate::error::{Error, Result};

/// Disjoint train / test / validation row indices covering `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThreeWaySplit {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub validation: Vec<usize>,
    pub seed: u64,
}

impl ThreeWaySplit {
    /// Partitions a seeded permutation of `0..n` into thirds; the remainder
    /// goes to the earlier parts.
    pub fn new(n: usize, seed: u64) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidConfig(format!("a three-way split needs n >= 3, got {n}")));
        }
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let base = n / 3;
        let rem = n % 3;
        let sizes = [base + usize::from(rem > 0), base + usize::from(rem > 1), base];
        let validation = perm.split_off(sizes[0] + sizes[1]);
        let test = perm.split_off(sizes[0]);
        Ok(Self {
            train: perm,
            test,
            validation,
            seed,
        })
    }

    pub fn apply(&self, dataset: &Dataset) -> (Dataset, Dataset, Dataset) {
        (
            dataset.subset(&self.train),
            dataset.subset(&self.test),
            dataset.subset(&self.validation),
        )
    }
}

pub fn split_three(dataset: &Dataset, seed: u64) -> Result<ThreeWaySplit> {
    ThreeWaySplit::new(dataset.n_samples(), seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn part_sizes() {
        let s = ThreeWaySplit::new(9, 0).unwrap();
        assert_eq!((s.train.len(), s.test.len(), s.validation.len()), (3, 3, 3));
        let s = ThreeWaySplit::new(10, 0).unwrap();
        assert_eq!((s.train.len(), s.test.len(), s.validation.len()), (4, 3, 3));
        let s = ThreeWaySplit::new(11, 0).unwrap();
        assert_eq!((s.train.len(), s.test.len(), s.validation.len()), (4, 4, 3));
        assert!(ThreeWaySplit::new(2, 0).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(ThreeWaySplit::new(50, 3).unwrap(), ThreeWaySplit::new(50, 3).unwrap());
        assert_ne!(ThreeWaySplit::new(50, 3).unwrap(), ThreeWaySplit::new(50, 4).unwrap());
    }

    proptest! {
        #[test]
        fn disjoint_and_exhaustive(n in 3usize..=1000, seed in any::<u64>()) {
            let s = ThreeWaySplit::new(n, seed).unwrap();
            let mut all: Vec<usize> = s.train.iter().chain(&s.test).chain(&s.validation).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            for part in [&s.train, &s.test, &s.validation] {
                prop_assert!((part.len() as f64 - n as f64 / 3.0).abs() <= 1.0);
            }
        }
    }
}
