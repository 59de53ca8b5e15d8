//! Estimators and tests used by the verification recipes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("order-statistic count k = {k} must satisfy 1 ≤ k < {m}")]
    InvalidK { k: usize, m: usize },
    #[error("samples must be positive and finite")]
    NonPositive,
    #[error("degenerate sample: all top order statistics coincide")]
    Degenerate,
    #[error("self-similarity fit needs ≥ 3 distinct scales spanning ≥ 2 decades")]
    NonSpanningScales,
    #[error("empty sample")]
    Empty,
}

/// Smallest sample accepted by [`hill_estimator`].
pub const MIN_HILL_SAMPLES: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HillEstimate {
    pub alpha: f64,
    pub lower: f64,
    pub upper: f64,
    pub k: usize,
    pub samples: usize,
}

impl HillEstimate {
    pub fn covers(&self, alpha: f64) -> bool {
        self.lower <= alpha && alpha <= self.upper
    }
}

/// Default order-statistic count `⌊√M⌋`.
pub fn default_hill_k(m: usize) -> usize {
    (m as f64).sqrt().floor() as usize
}

/// Hill estimator over the top `k` order statistics, with band `± 2α̂/√k`.
pub fn hill_estimator(samples: &[f64], k: usize) -> Result<HillEstimate, StatsError> {
    let m = samples.len();
    if m < MIN_HILL_SAMPLES {
        return Err(StatsError::TooFewSamples {
            needed: MIN_HILL_SAMPLES,
            got: m,
        });
    }
    if k == 0 || k >= m {
        return Err(StatsError::InvalidK { k, m });
    }
    if samples.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(StatsError::NonPositive);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let threshold = sorted[k].ln();
    let mean_spacing = sorted[..k].iter().map(|x| x.ln() - threshold).sum::<f64>() / k as f64;
    if !(mean_spacing > 0.0) {
        return Err(StatsError::Degenerate);
    }
    let alpha = 1.0 / mean_spacing;
    let half = 2.0 * alpha / (k as f64).sqrt();
    Ok(HillEstimate {
        alpha,
        lower: alpha - half,
        upper: alpha + half,
        k,
        samples: m,
    })
}

/// Least-squares slope of `log median` against `log N`.
pub fn selfsimilarity_exponent(points: &[(f64, f64)]) -> Result<f64, StatsError> {
    let mut ns: Vec<f64> = points.iter().map(|p| p.0).collect();
    ns.sort_by(f64::total_cmp);
    ns.dedup();
    if ns.len() < 3 || (ns[ns.len() - 1] / ns[0]).log10() < 2.0 - 1e-12 {
        return Err(StatsError::NonSpanningScales);
    }
    if points.iter().any(|&(n, m)| !(n > 0.0) || !(m > 0.0)) {
        return Err(StatsError::NonPositive);
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = mean(&xs);
    let my = mean(&ys);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Kolmogorov survival function `Q(x) = P[sup |B°| > x]`.
pub fn kolmogorov_q(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.18 {
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let s: f64 = (1..=8)
            .map(|k| {
                let j = (2 * k - 1) as f64;
                (-(j * j) * pi2 / (8.0 * x * x)).exp()
            })
            .sum();
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / x * s).clamp(0.0, 1.0)
    } else {
        let s: f64 = (1..=100)
            .map(|k| {
                let k = k as f64;
                let sign = if k as u64 % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * k * k * x * x).exp()
            })
            .sum();
        (2.0 * s).clamp(0.0, 1.0)
    }
}

/// Asymptotic p-value with Stephens' small-sample correction.
fn ks_p_value(statistic: f64, effective_n: f64) -> f64 {
    let root = effective_n.sqrt();
    kolmogorov_q((root + 0.12 + 0.11 / root) * statistic)
}

/// Exact two-sample Kolmogorov–Smirnov statistic with asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(KsResult {
        statistic: d,
        p_value: ks_p_value(d, na * nb / (na + nb)),
    })
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<KsResult, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    Ok(KsResult {
        statistic: d,
        p_value: ks_p_value(d, n),
    })
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (`n - 1` denominator); 0 for fewer than two values.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Linear-interpolation quantile (type 7).
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// Pearson correlation; `None` when either sample is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    let mx = mean(x);
    let my = mean(y);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some(sxy / (sxx * syy).sqrt())
    }
}

/// Mid-ranks (ties share their average rank), 1-based.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation; `None` when either sample is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson(&ranks(x), &ranks(y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedStream;
    use proptest::prelude::*;
    use rand::Rng;

    fn pareto_sample(alpha: f64, m: usize, seed: u64) -> Vec<f64> {
        let mut rng = SeedStream::new(seed).rng();
        (0..m).map(|_| (1.0 - rng.random::<f64>()).powf(-1.0 / alpha)).collect()
    }

    #[test]
    fn hill_on_exact_pareto() {
        // α̂ at k = 100 has s.d. ≈ α/10, so [0.4, 0.6] holds for ~95% of samples.
        let estimates: Vec<HillEstimate> = (0..20)
            .map(|seed| hill_estimator(&pareto_sample(0.5, 10_000, seed), 100).unwrap())
            .collect();
        let inside = estimates.iter().filter(|h| (0.4..=0.6).contains(&h.alpha)).count();
        assert!(inside >= 17, "{inside}");
        let alphas: Vec<f64> = estimates.iter().map(|h| h.alpha).collect();
        assert!((median(&alphas) - 0.5).abs() < 0.03);
        let covered = (0..20)
            .filter(|&seed| {
                let xs = pareto_sample(0.5, 10_000, 100 + seed);
                hill_estimator(&xs, default_hill_k(xs.len())).unwrap().covers(0.5)
            })
            .count();
        assert!(covered >= 17, "{covered}");
    }

    #[test]
    fn hill_flags_light_tails_and_bad_input() {
        let mut rng = SeedStream::new(2).rng();
        let xs: Vec<f64> = (0..10_000).map(|_| rng.sample::<f64, _>(rand_distr::Exp1)).collect();
        let h = hill_estimator(&xs, 100).unwrap();
        assert!(h.lower > 1.0, "{h:?}");
        assert_eq!(hill_estimator(&[2.0; 100], 10).unwrap_err(), StatsError::Degenerate);
        assert!(matches!(hill_estimator(&[1.0; 49], 5), Err(StatsError::TooFewSamples { .. })));
        let mut neg = pareto_sample(0.5, 100, 3);
        neg[7] = -1.0;
        assert_eq!(hill_estimator(&neg, 10).unwrap_err(), StatsError::NonPositive);
    }

    #[test]
    fn hill_matches_hand_computation() {
        // top 2 of {e², e, 1, ...}: mean(log(e²/1), log(e/1)) = 1.5
        let mut xs = vec![1.0; 60];
        xs[0] = 1f64.exp().powi(2);
        xs[1] = 1f64.exp();
        let h = hill_estimator(&xs, 2).unwrap();
        assert!((h.alpha - 1.0 / 1.5).abs() < 1e-12);
    }

    #[test]
    fn selfsimilarity_regression() {
        let linear = [(1e2, 1e2), (1e3, 1e3), (1e4, 1e4)];
        assert!((selfsimilarity_exponent(&linear).unwrap() - 1.0).abs() < 1e-12);
        let square = [(1e2, 1e4), (1e3, 1e6), (1e4, 1e8), (3e4, 9e8)];
        assert!((selfsimilarity_exponent(&square).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(
            selfsimilarity_exponent(&[(1e2, 1.0), (1e3, 2.0), (5e3, 3.0)]).unwrap_err(),
            StatsError::NonSpanningScales
        );
        assert_eq!(
            selfsimilarity_exponent(&[(1e2, 1.0), (1e4, 2.0)]).unwrap_err(),
            StatsError::NonSpanningScales
        );
    }

    #[test]
    fn ks_extremes() {
        let a = [1.0, 2.0, 3.0, 3.0];
        assert_eq!(ks_two_sample(&a, &a).unwrap().statistic, 0.0);
        assert_eq!(ks_two_sample(&a, &a).unwrap().p_value, 1.0);
        let b = [10.0, 11.0];
        assert_eq!(ks_two_sample(&a, &b).unwrap().statistic, 1.0);
        // ties across samples: {1, 2} vs {2, 3}
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[2.0, 3.0]).unwrap().statistic, 0.5);
        assert!(ks_two_sample(&[], &b).is_err());
    }

    #[test]
    fn kolmogorov_distribution_reference_values() {
        // Q(x) at the classical critical values of the Kolmogorov distribution.
        assert!((kolmogorov_q(1.3581) - 0.05).abs() < 2e-4);
        assert!((kolmogorov_q(1.6276) - 0.01).abs() < 1e-4);
        assert!((kolmogorov_q(1.2238) - 0.10).abs() < 2e-4);
        // the two series agree at the switch point
        let pi2 = std::f64::consts::PI.powi(2);
        let x: f64 = 1.18;
        let small = 1.0
            - (2.0 * std::f64::consts::PI).sqrt() / x
                * (1..=8).map(|k| (-((2 * k - 1) as f64).powi(2) * pi2 / (8.0 * x * x)).exp()).sum::<f64>();
        assert!((small - kolmogorov_q(x)).abs() < 1e-12);
    }

    #[test]
    fn one_sample_ks_uniform() {
        let mut rng = SeedStream::new(4).rng();
        let xs: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        let r = ks_one_sample(&xs, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(r.statistic < 0.03 && r.p_value > 0.001);
    }

    #[test]
    fn rank_correlations() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [1.0, 8.0, 27.0, 64.0];
        assert!((spearman(&x, &y).unwrap() - 1.0).abs() < 1e-15);
        assert!(pearson(&x, &y).unwrap() < 1.0);
        assert_eq!(spearman(&x, &[5.0; 4]), None);
        assert_eq!(ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn summary_statistics() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(std_dev(&[2.0, 2.0]), 0.0);
        assert!((std_dev(&[1.0, 2.0, 3.0, 4.0]) - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn ks_statistic_is_symmetric_and_bounded(
            a in prop::collection::vec(-5.0f64..5.0, 1..80),
            b in prop::collection::vec(-5.0f64..5.0, 1..80),
        ) {
            let ab = ks_two_sample(&a, &b).unwrap();
            let ba = ks_two_sample(&b, &a).unwrap();
            prop_assert_eq!(ab.statistic, ba.statistic);
            prop_assert!((0.0..=1.0).contains(&ab.statistic));
            prop_assert!((0.0..=1.0).contains(&ab.p_value));
        }

        #[test]
        fn ks_matches_brute_force(
            a in prop::collection::vec(0u8..10, 1..40),
            b in prop::collection::vec(0u8..10, 1..40),
        ) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let ecdf = |s: &[f64], x: f64| s.iter().filter(|&&v| v <= x).count() as f64 / s.len() as f64;
            let brute = a.iter().chain(&b).map(|&x| (ecdf(&a, x) - ecdf(&b, x)).abs()).fold(0.0, f64::max);
            prop_assert!((ks_two_sample(&a, &b).unwrap().statistic - brute).abs() < 1e-12);
        }

        #[test]
        fn hill_is_scale_invariant(seed in any::<u64>(), c in 0.01f64..100.0) {
            let xs = pareto_sample(0.7, 200, seed);
            let ys: Vec<f64> = xs.iter().map(|x| c * x).collect();
            let a = hill_estimator(&xs, 20).unwrap().alpha;
            let b = hill_estimator(&ys, 20).unwrap().alpha;
            prop_assert!((a - b).abs() < 1e-9 * a);
        }
    }
}
