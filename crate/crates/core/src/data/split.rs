use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng::{self, streams};
use crate::{Error, Result};

/// One train/test partition of a 5x2 cross-validation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub repetition: usize,
    /// 0 trains on the first half and tests on the second; 1 swaps them.
    pub fold: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Five seeded shuffles of `0..n`, each halved into two folds used in turn
/// for training and testing: ten splits in total.
pub fn kfold_5x2(n: usize, seed: u64) -> Result<Vec<Split>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("cross-validation needs at least 2 samples, got {n}")));
    }
    let mut splits = Vec::with_capacity(10);
    for repetition in 0..5 {
        let mut rng = rng::stream(seed, streams::CV_SPLIT + repetition as u64);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let (a, b) = order.split_at(n / 2);
        for (fold, (train, test)) in [(a, b), (b, a)].into_iter().enumerate() {
            splits.push(Split {
                repetition,
                fold,
                train: train.to_vec(),
                test: test.to_vec(),
            });
        }
    }
    Ok(splits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ten_halving_splits() {
        let splits = kfold_5x2(100, 3).unwrap();
        assert_eq!(splits.len(), 10);
        assert!(splits.iter().all(|s| s.test.len() == 50 && s.train.len() == 50));
        assert_eq!(splits, kfold_5x2(100, 3).unwrap());
        assert_ne!(splits, kfold_5x2(100, 4).unwrap());
        assert!(kfold_5x2(1, 0).is_err());
    }

    proptest! {
        #[test]
        fn partitions_and_coverage(n in 2usize..300, seed in any::<u64>()) {
            let splits = kfold_5x2(n, seed).unwrap();
            let mut test_count = vec![0; n];
            for pair in splits.chunks(2) {
                let mut seen = vec![0; n];
                for s in pair {
                    for &i in &s.test {
                        seen[i] += 1;
                        test_count[i] += 1;
                    }
                    let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
                    all.sort_unstable();
                    prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
                }
                prop_assert!(seen.iter().all(|&c| c == 1));
            }
            prop_assert!(test_count.iter().all(|&c| c == 5));
        }
    }
}
