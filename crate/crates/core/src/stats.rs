//! Correlation, least squares and the Mann-Whitney U rank-sum test.

use std::cmp::Ordering;

use crate::error::{invalid, Error, Result};
use crate::landscape::normal_cdf;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn median(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    Ok(if n % 2 == 0 {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    } else {
        sorted[n / 2]
    })
}

/// Centered second moments `(sxx, syy, sxy)`.
fn is_constant(xs: &[f64]) -> bool {
    xs.iter().all(|&x| x == xs[0])
}

fn moments(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let (mx, my) = (mean(xs), mean(ys));
    xs.iter().zip(ys).fold((0.0, 0.0, 0.0), |(sxx, syy, sxy), (&x, &y)| {
        let (dx, dy) = (x - mx, y - my);
        (sxx + dx * dx, syy + dy * dy, sxy + dx * dy)
    })
}

fn check_paired(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(invalid(format!("paired samples differ in length: {} vs {}", xs.len(), ys.len())));
    }
    if xs.len() < 2 {
        return Err(invalid("at least two points are needed"));
    }
    Ok(())
}

/// Pearson correlation coefficient. Fails when either sample is constant.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_paired(xs, ys)?;
    if is_constant(xs) || is_constant(ys) {
        return Err(Error::Degenerate("zero variance".into()));
    }
    let (sxx, syy, sxy) = moments(xs, ys);
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("zero variance".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
    /// Zero when `ys` is constant.
    pub pearson_r: f64,
    pub n_points: usize,
}

impl RegressionFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Ordinary least squares fit of `ys` on `xs`.
pub fn linear_regression(xs: &[f64], ys: &[f64]) -> Result<RegressionFit> {
    check_paired(xs, ys)?;
    if is_constant(xs) {
        return Err(Error::Degenerate("x values are all equal".into()));
    }
    let (sxx, syy, sxy) = moments(xs, ys);
    let (slope, intercept) = if is_constant(ys) {
        (0.0, ys[0])
    } else {
        let slope = sxy / sxx;
        (slope, mean(ys) - slope * mean(xs))
    };
    let pearson_r = if is_constant(ys) {
        0.0
    } else {
        (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
    };
    Ok(RegressionFit {
        slope,
        intercept,
        pearson_r,
        n_points: xs.len(),
    })
}

/// How the two-sided p-value of [`mann_whitney_u_with`] is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PValueMethod {
    /// Exact permutation distribution of the (mid-)rank sum.
    Exact,
    /// Normal approximation with tie and continuity corrections.
    Normal,
    /// Exact up to 20 observations in total, normal beyond.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankTestResult {
    /// U statistic of the first sample: its rank sum minus `n1(n1+1)/2`.
    pub u_statistic: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    pub n1: usize,
    pub n2: usize,
}

/// Mid-ranks (1-based) of `values`, tied values sharing the average rank.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = rank;
        }
        i = j;
    }
    ranks
}

pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<RankTestResult> {
    mann_whitney_u_with(a, b, PValueMethod::Auto)
}

pub fn mann_whitney_u_with(a: &[f64], b: &[f64], method: PValueMethod) -> Result<RankTestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(invalid("samples contain NaN"));
    }
    let (n1, n2) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let rank_sum: f64 = ranks[..n1].iter().sum();
    let u_statistic = rank_sum - (n1 * (n1 + 1)) as f64 / 2.0;

    let exact = match method {
        PValueMethod::Exact => true,
        PValueMethod::Normal => false,
        PValueMethod::Auto => n1 + n2 <= 20,
    };
    let p_value = if exact {
        exact_p(&ranks, n1)
    } else {
        normal_p(&pooled, u_statistic, n1, n2)
    };
    Ok(RankTestResult {
        u_statistic,
        p_value: p_value.clamp(0.0, 1.0),
        n1,
        n2,
    })
}

/// Two-sided exact p-value: the share of all `C(N, n1)` rank assignments whose
/// rank sum is at least as far from its mean as the observed one.
///
/// Mid-ranks are doubled so that all sums are integers; the subset-sum counts
/// are built by dynamic programming.
fn exact_p(ranks: &[f64], n1: usize) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max_sum: usize = doubled.iter().sum();
    // counts[c][s]: subsets of size c with doubled rank sum s.
    let mut counts = vec![vec![0.0f64; max_sum + 1]; n1 + 1];
    counts[0][0] = 1.0;
    for (seen, &r) in doubled.iter().enumerate() {
        for c in (1..=n1.min(seen + 1)).rev() {
            let (lower, upper) = counts.split_at_mut(c);
            for s in (r..=max_sum).rev() {
                upper[0][s] += lower[c - 1][s - r];
            }
        }
    }
    let n = ranks.len();
    let center = (n1 * (n + 1)) as i64;
    let observed: usize = doubled[..n1].iter().sum();
    let threshold = (observed as i64 - center).abs();
    let total: f64 = counts[n1].iter().sum();
    let extreme: f64 = counts[n1]
        .iter()
        .enumerate()
        .filter(|&(s, _)| (s as i64 - center).abs() >= threshold)
        .map(|(_, c)| c)
        .sum();
    extreme / total
}

fn normal_p(pooled: &[f64], u: f64, n1: usize, n2: usize) -> f64 {
    let n = (n1 + n2) as f64;
    let (f1, f2) = (n1 as f64, n2 as f64);
    let mut sorted = pooled.to_vec();
    sorted.sort_by(f64::total_cmp);
    let ties: f64 = sorted
        .chunk_by(|x, y| x == y)
        .map(|g| {
            let t = g.len() as f64;
            t * t * t - t
        })
        .sum();
    let variance = f1 * f2 / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    if variance <= 0.0 {
        return 1.0;
    }
    let mean_u = f1 * f2 / 2.0;
    let z = ((u - mean_u).abs() - 0.5).max(0.0) / variance.sqrt();
    2.0 * (1.0 - normal_cdf(z))
}

/// Whether lower or higher metric values are better.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Better {
    Lower,
    Higher,
}

impl Better {
    fn prefers(self, x: f64, y: f64) -> bool {
        match self {
            Better::Lower => x.partial_cmp(&y) == Some(Ordering::Less),
            Better::Higher => x.partial_cmp(&y) == Some(Ordering::Greater),
        }
    }
}

/// For each group, the number of other groups that significantly outperform it:
/// `p < alpha` in a two-sided Mann-Whitney test and a better median.
pub fn outperformance_counts(groups: &[Vec<f64>], alpha: f64, better: Better) -> Result<Vec<usize>> {
    if groups.len() < 2 {
        return Err(invalid("need at least two groups"));
    }
    if groups.iter().any(|g| g.len() < 2) {
        return Err(invalid("each group needs at least two observations"));
    }
    let medians = groups.iter().map(|g| median(g)).collect::<Result<Vec<_>>>()?;
    let mut counts = vec![0; groups.len()];
    for (i, count) in counts.iter_mut().enumerate() {
        for j in (0..groups.len()).filter(|&j| j != i) {
            if better.prefers(medians[j], medians[i]) && mann_whitney_u(&groups[i], &groups[j])?.p_value < alpha {
                *count += 1;
            }
        }
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    /// Brute-force exact p-value by enumerating every subset of ranks.
    fn enumerate_p(ranks: &[f64], n1: usize) -> f64 {
        let n = ranks.len();
        let center = n1 as f64 * (n as f64 + 1.0) / 2.0;
        let observed = (ranks[..n1].iter().sum::<f64>() - center).abs();
        let (mut hit, mut total) = (0u64, 0u64);
        for mask in 0u32..1 << n {
            if mask.count_ones() as usize != n1 {
                continue;
            }
            let s: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
            total += 1;
            if (s - center).abs() >= observed - 1e-9 {
                hit += 1;
            }
        }
        hit as f64 / total as f64
    }

    #[test]
    fn regression_identity_and_constant() {
        let xs = [1.0, 2.0, 3.5, 7.0];
        let fit = linear_regression(&xs, &xs).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-12 && fit.intercept.abs() < 1e-12);
        assert!((fit.pearson_r - 1.0).abs() < 1e-12);
        let flat = linear_regression(&xs, &[2.0; 4]).unwrap();
        assert_eq!((flat.slope, flat.pearson_r), (0.0, 0.0));
        assert!((flat.intercept - 2.0).abs() < 1e-12);
    }

    #[test]
    fn regression_hand_dataset() {
        // Normal equations by hand: Σx=15, Σy=19, Σxy=66, Σx²=55, n=5.
        // slope = (5·66 − 15·19)/(5·55 − 225) = 45/50 = 0.9,
        // intercept = (19 − 0.9·15)/5 = 1.1.
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let ys = [2.0, 3.0, 4.0, 4.0, 6.0];
        let fit = linear_regression(&xs, &ys).unwrap();
        assert!((fit.slope - 0.9).abs() < 1e-12);
        assert!((fit.intercept - 1.1).abs() < 1e-12);
        // r = Sxy / sqrt(Sxx·Syy) = 9 / sqrt(10 · 8.8)
        assert!((fit.pearson_r - 9.0 / (88.0f64).sqrt()).abs() < 1e-12);
        assert_eq!(fit.n_points, 5);
    }

    #[test]
    fn regression_errors() {
        assert!(matches!(linear_regression(&[1.0, 1.0], &[1.0, 2.0]), Err(Error::Degenerate(_))));
        assert!(linear_regression(&[1.0], &[1.0]).is_err());
        assert!(linear_regression(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn r_squared_matches_pearson() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..40).map(|_| rng.random()).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 0.3 * x + rng.random::<f64>()).collect();
        let fit = linear_regression(&xs, &ys).unwrap();
        let my = mean(&ys);
        let ss_res: f64 = xs.iter().zip(&ys).map(|(&x, &y)| (y - fit.predict(x)).powi(2)).sum();
        let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        assert!((1.0 - ss_res / ss_tot - fit.pearson_r.powi(2)).abs() < 1e-12);
        assert!((pearson(&xs, &ys).unwrap() - fit.pearson_r).abs() < 1e-15);
    }

    #[test]
    fn midranks_average_ties() {
        assert_eq!(midranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn separated_triples() {
        let r = mann_whitney_u(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(r.u_statistic, 0.0);
        assert!((r.p_value - 0.1).abs() < 1e-12);
        let mirrored = mann_whitney_u(&[4.0, 5.0, 6.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(mirrored.u_statistic, 9.0);
        assert!((mirrored.p_value - 0.1).abs() < 1e-12);
    }

    #[test]
    fn identical_samples() {
        let a = [0.3, 0.1, 0.7, 0.2];
        let r = mann_whitney_u(&a, &a).unwrap();
        assert_eq!(r.u_statistic, 8.0);
        assert!(r.p_value > 0.99);
        let big: Vec<f64> = (0..15).map(f64::from).collect();
        let r = mann_whitney_u(&big, &big).unwrap();
        assert_eq!(r.u_statistic, 112.5);
        assert!((r.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_sample_is_an_error() {
        assert!(matches!(mann_whitney_u(&[], &[1.0]), Err(Error::EmptySample)));
    }

    #[test]
    fn exact_dp_matches_enumeration_with_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..30 {
            let n1 = rng.random_range(1..8);
            let n2 = rng.random_range(1..8);
            let a: Vec<f64> = (0..n1).map(|_| rng.random_range(0..5) as f64).collect();
            let b: Vec<f64> = (0..n2).map(|_| rng.random_range(0..5) as f64).collect();
            let ranks = midranks(&[a.clone(), b.clone()].concat());
            let r = mann_whitney_u_with(&a, &b, PValueMethod::Exact).unwrap();
            assert!((r.p_value - enumerate_p(&ranks, n1)).abs() < 1e-12);
        }
    }

    #[test]
    fn permutation_invariance() {
        let a = [0.5, 0.1, 0.9, 0.4, 0.45];
        let b = [0.2, 0.8, 0.3, 0.05, 0.6, 0.7];
        let r = mann_whitney_u(&a, &b).unwrap();
        let mut a2 = a;
        a2.reverse();
        let b2 = [0.6, 0.7, 0.05, 0.3, 0.8, 0.2];
        assert_eq!(mann_whitney_u(&a2, &b2).unwrap(), r);
    }

    #[test]
    fn exact_and_normal_agree_at_twelve() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for shift in [0.0, 0.1, 0.25, 0.5] {
            let a: Vec<f64> = (0..12).map(|_| rng.random::<f64>()).collect();
            let b: Vec<f64> = (0..12).map(|_| rng.random::<f64>() + shift).collect();
            let e = mann_whitney_u_with(&a, &b, PValueMethod::Exact).unwrap().p_value;
            let n = mann_whitney_u_with(&a, &b, PValueMethod::Normal).unwrap().p_value;
            assert!((e - n).abs() <= 0.02, "exact {e} vs normal {n}");
        }
    }

    #[test]
    fn outperformance_patterns() {
        let same = vec![vec![1.0, 2.0, 3.0, 4.0]; 3];
        assert_eq!(outperformance_counts(&same, 0.05, Better::Lower).unwrap(), vec![0, 0, 0]);

        let good: Vec<Vec<f64>> = (0..3)
            .map(|g| (0..10).map(|i| g as f64 * 0.01 + i as f64 * 0.1).collect())
            .collect();
        let bad: Vec<f64> = (0..10).map(|i| 5.0 + i as f64 * 0.1).collect();
        let mut groups = good.clone();
        groups.push(bad.clone());
        for g in &good {
            assert!(mann_whitney_u(&bad, g).unwrap().p_value < 0.05);
        }
        assert_eq!(outperformance_counts(&groups, 0.05, Better::Lower).unwrap(), vec![0, 0, 0, 3]);
        assert_eq!(outperformance_counts(&groups, 0.05, Better::Higher).unwrap(), vec![1, 1, 1, 0]);
        assert!(outperformance_counts(&groups[..1], 0.05, Better::Lower).is_err());
    }
}
