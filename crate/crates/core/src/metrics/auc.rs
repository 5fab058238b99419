use crate::{Error, Result};

/// Per-sample class scores `[n, classes]` with true labels.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreMatrix {
    classes: usize,
    scores: Vec<f64>,
    labels: Vec<usize>,
}

impl ScoreMatrix {
    /// Arbitrary finite scores; AUC only looks at their order.
    pub fn new(scores: Vec<f64>, classes: usize, labels: Vec<usize>) -> Result<Self> {
        if classes == 0 || scores.len() != labels.len() * classes {
            return Err(Error::Shape(format!(
                "{} scores do not form {} rows of {classes} classes",
                scores.len(),
                labels.len()
            )));
        }
        if let Some(&y) = labels.iter().find(|&&y| y >= classes) {
            return Err(Error::InvalidArgument(format!("label {y} out of range for {classes} classes")));
        }
        if scores.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("class scores".into()));
        }
        Ok(Self { classes, scores, labels })
    }

    /// Softmax outputs: additionally checks that each row sums to one.
    pub fn probabilities(scores: Vec<f64>, classes: usize, labels: Vec<usize>) -> Result<Self> {
        let m = Self::new(scores, classes, labels)?;
        for (i, row) in m.scores.chunks(classes).enumerate() {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidArgument(format!("score row {i} sums to {sum}")));
            }
        }
        Ok(m)
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.scores[i * self.classes..(i + 1) * self.classes]
    }

    pub fn score(&self, sample: usize, class: usize) -> f64 {
        self.scores[sample * self.classes + class]
    }

    /// Classes with at least one sample.
    pub fn present_classes(&self) -> Vec<usize> {
        let mut seen = vec![false; self.classes];
        for &y in &self.labels {
            seen[y] = true;
        }
        (0..self.classes).filter(|&k| seen[k]).collect()
    }

    /// Row-wise argmax, ties to the smallest class.
    pub fn argmax(&self) -> Vec<usize> {
        self.scores
            .chunks(self.classes)
            .map(|row| {
                let mut best = 0;
                for (k, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = k;
                    }
                }
                best
            })
            .collect()
    }
}

/// Probability that a random `pos` score exceeds a random `neg` score, ties
/// counted half, via the rank-sum statistic with average ranks.
pub fn auc_from_scores(pos: &[f64], neg: &[f64]) -> f64 {
    let mut all: Vec<(f64, bool)> = pos.iter().map(|&v| (v, true)).chain(neg.iter().map(|&v| (v, false))).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        // 1-based ranks i+1 ..= j+1 share their mean
        let avg = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += avg * all[i..=j].iter().filter(|e| e.1).count() as f64;
        i = j + 1;
    }
    let (np, nn) = (pos.len() as f64, neg.len() as f64);
    (rank_sum - np * (np + 1.0) / 2.0) / (np * nn)
}

/// Symmetric one-vs-one AUC `(A(i|j) + A(j|i)) / 2`; `None` when either
/// class has no samples.
pub fn pairwise_auc(scores: &ScoreMatrix, i: usize, j: usize) -> Option<f64> {
    let column = |class: usize, of: usize| -> Vec<f64> {
        (0..scores.len())
            .filter(|&n| scores.labels[n] == of)
            .map(|n| scores.score(n, class))
            .collect()
    };
    if i >= scores.classes || j >= scores.classes || i == j {
        return None;
    }
    let (ii, ij) = (column(i, i), column(i, j));
    if ii.is_empty() || ij.is_empty() {
        return None;
    }
    let (jj, ji) = (column(j, j), column(j, i));
    Some((auc_from_scores(&ii, &ij) + auc_from_scores(&jj, &ji)) / 2.0)
}

/// Mean pairwise AUC over all pairs of present classes.
pub fn mauc(scores: &ScoreMatrix) -> Result<f64> {
    let present = scores.present_classes();
    if present.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "multi-class AUC needs two classes present, found {}",
            present.len()
        )));
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for (a, &i) in present.iter().enumerate() {
        for &j in &present[a + 1..] {
            if let Some(v) = pairwise_auc(scores, i, j) {
                total += v;
                pairs += 1;
            }
        }
    }
    Ok(total / pairs as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn brute_pair(s: &ScoreMatrix, i: usize, j: usize) -> Option<f64> {
        let one_way = |c: usize, a: usize, b: usize| {
            let mut wins = 0.0;
            let mut n = 0.0;
            for p in (0..s.len()).filter(|&p| s.labels()[p] == a) {
                for q in (0..s.len()).filter(|&q| s.labels()[q] == b) {
                    let (x, y) = (s.score(p, c), s.score(q, c));
                    wins += if x > y { 1.0 } else if x == y { 0.5 } else { 0.0 };
                    n += 1.0;
                }
            }
            (n > 0.0).then(|| wins / n)
        };
        Some((one_way(i, i, j)? + one_way(j, j, i)?) / 2.0)
    }

    fn brute_mauc(s: &ScoreMatrix) -> f64 {
        let mut vals = Vec::new();
        for i in 0..s.classes() {
            for j in i + 1..s.classes() {
                if let Some(v) = brute_pair(s, i, j) {
                    vals.push(v);
                }
            }
        }
        vals.iter().sum::<f64>() / vals.len() as f64
    }

    /// Softmax rows with coarse values so ties occur.
    fn random_scores(seed: u64, n: usize, k: usize) -> ScoreMatrix {
        let mut rng = rng::stream(seed, 0);
        let mut scores = Vec::new();
        for _ in 0..n {
            let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0..6) as f64 * 0.5).collect();
            let z: f64 = raw.iter().map(|v| v.exp()).sum();
            scores.extend(raw.iter().map(|v| v.exp() / z));
        }
        let mut labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        labels[0] = 0;
        labels[1] = 1;
        ScoreMatrix::probabilities(scores, k, labels).unwrap()
    }

    #[test]
    fn examples() {
        let perfect = ScoreMatrix::new(vec![0.9, 0.1, 0.8, 0.2, 0.1, 0.9, 0.2, 0.8], 2, vec![0, 0, 1, 1]).unwrap();
        assert_eq!(pairwise_auc(&perfect, 0, 1), Some(1.0));
        assert_eq!(mauc(&perfect).unwrap(), 1.0);

        let flat = ScoreMatrix::new(vec![0.5; 8], 2, vec![0, 1, 0, 1]).unwrap();
        assert_eq!(pairwise_auc(&flat, 0, 1), Some(0.5));

        assert_eq!(auc_from_scores(&[0.9, 0.4], &[0.6]), 0.5);

        let three = ScoreMatrix::new(
            vec![0.8, 0.1, 0.1, 0.7, 0.2, 0.1, 0.1, 0.8, 0.1, 0.2, 0.1, 0.7],
            3,
            vec![0, 0, 1, 2],
        )
        .unwrap();
        assert_eq!(mauc(&three).unwrap(), 1.0);
    }

    #[test]
    fn undefined_pairs() {
        let s = ScoreMatrix::new(vec![0.5, 0.3, 0.2, 0.1, 0.1, 0.8], 3, vec![0, 2]).unwrap();
        assert_eq!(pairwise_auc(&s, 0, 1), None);
        assert!(pairwise_auc(&s, 0, 2).is_some());
        assert_eq!(mauc(&s).unwrap(), pairwise_auc(&s, 0, 2).unwrap());
        let single = ScoreMatrix::new(vec![0.5, 0.5], 2, vec![1]).unwrap();
        assert!(mauc(&single).is_err());
    }

    #[test]
    fn validation() {
        assert!(ScoreMatrix::new(vec![0.5; 5], 2, vec![0, 1]).is_err());
        assert!(ScoreMatrix::new(vec![0.5; 4], 2, vec![0, 2]).is_err());
        assert!(ScoreMatrix::probabilities(vec![0.5, 0.6], 2, vec![0]).is_err());
    }

    #[test]
    fn brute_force_on_fixed_instances() {
        for seed in 0..50 {
            let s = random_scores(seed, 40, 4);
            assert!((mauc(&s).unwrap() - brute_mauc(&s)).abs() <= 1e-9);
        }
    }

    proptest! {
        #[test]
        fn matches_brute_force(seed in any::<u64>(), n in 2usize..=60, k in 2usize..=5) {
            let s = random_scores(seed, n, k);
            prop_assert!((mauc(&s).unwrap() - brute_mauc(&s)).abs() <= 1e-9);
            for i in 0..k {
                for j in 0..k {
                    if i != j {
                        match (pairwise_auc(&s, i, j), brute_pair(&s, i, j)) {
                            (Some(a), Some(b)) => prop_assert!((a - b).abs() <= 1e-9),
                            (a, b) => prop_assert_eq!(a, b),
                        }
                    }
                }
            }
        }

        #[test]
        fn depends_only_on_ranks(seed in any::<u64>(), n in 2usize..40) {
            let mut rng = rng::stream(seed, 1);
            let raw: Vec<f64> = (0..3 * n).map(|_| rng.random_range(0..8) as f64 * 0.25).collect();
            let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
            let s = ScoreMatrix::new(raw, 3, labels).unwrap();
            let mapped: Vec<f64> = (0..s.len()).flat_map(|r| s.row(r).to_vec()).map(|v| (3.0 * v).exp() - 7.0).collect();
            let t = ScoreMatrix::new(mapped, 3, s.labels().to_vec()).unwrap();
            for (i, j) in [(0, 1), (0, 2), (1, 2)] {
                match (pairwise_auc(&s, i, j), pairwise_auc(&t, i, j)) {
                    (Some(a), Some(b)) => prop_assert!((a - b).abs() <= 1e-12),
                    (a, b) => prop_assert_eq!(a, b),
                }
            }
        }

        #[test]
        fn sample_order_does_not_matter(seed in any::<u64>(), n in 2usize..40) {
            let s = random_scores(seed, n, 4);
            let rev: Vec<usize> = (0..n).rev().collect();
            let scores: Vec<f64> = rev.iter().flat_map(|&r| s.row(r).to_vec()).collect();
            let labels: Vec<usize> = rev.iter().map(|&r| s.labels()[r]).collect();
            let t = ScoreMatrix::new(scores, 4, labels).unwrap();
            prop_assert!((mauc(&s).unwrap() - mauc(&t).unwrap()).abs() <= 1e-12);
        }
    }
}
