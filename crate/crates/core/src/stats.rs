//! Summary statistics and goodness-of-fit tests for Monte-Carlo output.

use serde::{Deserialize, Serialize};

use crate::normal;

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample variance with divisor `len - 1`.
pub fn variance(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
}

/// Standard error of the sample mean.
pub fn mean_se(v: &[f64]) -> f64 {
    (variance(v) / v.len() as f64).sqrt()
}

/// Binomial standard error of a proportion.
pub fn proportion_se(rate: f64, n: usize) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    (rate * (1.0 - rate) / n as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// One-sample Kolmogorov-Smirnov test against N(0, 1). The p-value uses the
/// limiting Kolmogorov distribution with Stephens' small-sample correction.
pub fn ks_test_normal(sample: &[f64]) -> KsResult {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    let nf = n as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = normal::cdf(x);
        d = d.max((i + 1) as f64 / nf - f).max(f - i as f64 / nf);
    }
    let lambda = (nf.sqrt() + 0.12 + 0.11 / nf.sqrt()) * d;
    KsResult {
        statistic: d,
        p_value: kolmogorov_sf(lambda),
        n,
    }
}

/// `P(K > lambda)` for the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// `P(X >= k)` for `X ~ Binomial(m, 1/2)`.
pub fn binomial_half_upper_tail(k: usize, m: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > m {
        return 0.0;
    }
    let ln_half_m = -(m as f64) * std::f64::consts::LN_2;
    let mut ln_c = 0.0; // ln C(m, 0)
    let mut total = 0.0;
    for j in 0..=m {
        if j > 0 {
            ln_c += ((m - j + 1) as f64).ln() - (j as f64).ln();
        }
        if j >= k {
            total += (ln_c + ln_half_m).exp();
        }
    }
    total.min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignTestResult {
    pub positives: usize,
    pub negatives: usize,
    pub ties: usize,
    /// One-sided p-value for "differences tend to be positive".
    pub p_value: f64,
}

/// Sign test on paired differences; ties are dropped.
pub fn sign_test(differences: &[f64]) -> SignTestResult {
    let positives = differences.iter().filter(|&&v| v > 0.0).count();
    let negatives = differences.iter().filter(|&&v| v < 0.0).count();
    SignTestResult {
        positives,
        negatives,
        ties: differences.len() - positives - negatives,
        p_value: binomial_half_upper_tail(positives, positives + negatives),
    }
}
