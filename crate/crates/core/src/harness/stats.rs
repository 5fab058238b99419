use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::statistics::{Data, OrderStatistics, RankTieBreaker};

use crate::{Error, Result};

/// Largest combined sample size handled by exact enumeration.
pub const EXACT_MAX_N: usize = 12;

/// Significance level of [`MannWhitney::significant`].
pub const ALPHA: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// U statistic of the first sample.
    pub u: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    pub exact: bool,
    pub significant: bool,
}

/// Average ranks (1-based) of `a ++ b`.
fn pooled_ranks(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("Mann-Whitney U needs two non-empty samples".into()));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument("Mann-Whitney U got a NaN sample value".into()));
    }
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    Ok(Data::new(pooled).ranks(RankTieBreaker::Average))
}

fn u_of(rank_sum: f64, n_a: usize) -> f64 {
    rank_sum - (n_a * (n_a + 1)) as f64 / 2.0
}

fn finish(u: f64, p_value: f64, exact: bool) -> MannWhitney {
    let p_value = p_value.clamp(0.0, 1.0);
    MannWhitney {
        u,
        p_value,
        exact,
        significant: p_value < ALPHA,
    }
}

/// Two-sided test, exact when `a.len() + b.len() <= 12`, otherwise normal.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    if a.len() + b.len() <= EXACT_MAX_N {
        mann_whitney_exact(a, b)
    } else {
        mann_whitney_normal(a, b)
    }
}

/// Exact p-value by enumerating every assignment of the pooled (average)
/// ranks to the first sample: `P(|U - E U| >= |u - E U|)`.
pub fn mann_whitney_exact(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    let ranks = pooled_ranks(a, b)?;
    let n = ranks.len();
    if n > 30 {
        return Err(Error::InvalidArgument(format!("exact enumeration over {n} samples is too large")));
    }
    let n_a = a.len();
    let u = u_of(ranks[..n_a].iter().sum(), n_a);
    let centre = (n_a * b.len()) as f64 / 2.0;
    // U is a multiple of 1/2, so the comparison is exact
    let observed = (u - centre).abs();
    let (mut extreme, mut total) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != n_a {
            continue;
        }
        let sum: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        total += 1;
        if (u_of(sum, n_a) - centre).abs() >= observed {
            extreme += 1;
        }
    }
    Ok(finish(u, extreme as f64 / total as f64, true))
}

/// Normal approximation with tie and continuity corrections.
pub fn mann_whitney_normal(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    let ranks = pooled_ranks(a, b)?;
    let (n_a, n_b) = (a.len() as f64, b.len() as f64);
    let n = n_a + n_b;
    let u = u_of(ranks[..a.len()].iter().sum(), a.len());

    let mut sorted = ranks.clone();
    sorted.sort_by(f64::total_cmp);
    let mut ties = 0.0;
    for run in sorted.chunk_by(|x, y| x == y) {
        let t = run.len() as f64;
        ties += t * t * t - t;
    }
    let var = n_a * n_b / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    let dev = (u - n_a * n_b / 2.0).abs() - 0.5;
    if var <= 0.0 || dev <= 0.0 {
        return Ok(finish(u, 1.0, false));
    }
    let z = dev / var.sqrt();
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    Ok(finish(u, 2.0 * std_normal.sf(z), false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn brute_u(a: &[f64], b: &[f64]) -> f64 {
        let mut u = 0.0;
        for x in a {
            for y in b {
                u += if x > y { 1.0 } else if x == y { 0.5 } else { 0.0 };
            }
        }
        u
    }

    #[test]
    fn two_by_two_enumeration() {
        let r = mann_whitney_u(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(r.u, 0.0);
        assert!(r.exact);
        assert_abs_diff_eq!(r.p_value, 1.0 / 3.0, epsilon = 1e-15);
        assert!(!r.significant);
    }

    #[test]
    fn full_ties_give_one() {
        let r = mann_whitney_u(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!(r.u, 2.0);
        assert_eq!(r.p_value, 1.0);
        let r = mann_whitney_normal(&[0.5; 10], &[0.5; 10]).unwrap();
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn separated_samples_are_significant() {
        let a: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..10).map(|i| 100.0 + i as f64).collect();
        let r = mann_whitney_u(&a, &b).unwrap();
        assert!(!r.exact);
        assert_eq!(r.u, 0.0);
        assert!(r.p_value < 0.05 && r.significant, "{}", r.p_value);
    }

    #[test]
    fn empty_sample_rejected() {
        assert!(mann_whitney_u(&[], &[1.0]).is_err());
        assert!(mann_whitney_u(&[1.0], &[]).is_err());
    }

    #[test]
    fn exact_threshold_is_total_size() {
        assert!(mann_whitney_u(&[1.0; 6], &[2.0; 6]).unwrap().exact);
        assert!(!mann_whitney_u(&[1.0; 6], &[2.0; 7]).unwrap().exact);
    }

    #[test]
    fn one_vs_one_is_never_significant() {
        let r = mann_whitney_u(&[0.0], &[1.0]).unwrap();
        assert_eq!(r.p_value, 1.0);
    }

    proptest! {
        #[test]
        fn u_matches_pair_count(a in prop::collection::vec(0u8..6, 1..7), b in prop::collection::vec(0u8..6, 1..7)) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let r = mann_whitney_u(&a, &b).unwrap();
            prop_assert_eq!(r.u, brute_u(&a, &b));
            let swapped = mann_whitney_u(&b, &a).unwrap();
            prop_assert_eq!(r.u + swapped.u, (a.len() * b.len()) as f64);
            prop_assert!((r.p_value - swapped.p_value).abs() < 1e-12);
        }

        #[test]
        fn exact_and_normal_agree_without_ties(values in prop::collection::hash_set(0u32..10_000, 12)) {
            let v: Vec<f64> = values.into_iter().map(f64::from).collect();
            let (a, b) = v.split_at(6);
            let exact = mann_whitney_exact(a, b).unwrap();
            let normal = mann_whitney_normal(a, b).unwrap();
            prop_assert_eq!(exact.u, normal.u);
            prop_assert!((exact.p_value - normal.p_value).abs() <= 0.05, "{} vs {}", exact.p_value, normal.p_value);
        }
    }
}
