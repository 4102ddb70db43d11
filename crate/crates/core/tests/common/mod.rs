#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use silab_core::{Dataset, RandomStream};

pub fn logistic(eta: f64) -> f64 {
    1.0 / (1.0 + (-eta).exp())
}

/// Gaussian design with responses drawn from the logistic model at `beta`.
pub fn random_logistic(n: usize, beta: &[f64], seed: u64) -> Dataset {
    let p = beta.len();
    let mut rng = RandomStream::new(seed).rng();
    let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let y = (0..n)
        .map(|i| {
            let eta: f64 = (0..p).map(|j| x[(i, j)] * beta[j]).sum();
            if rng.random::<f64>() < logistic(eta) { 1.0 } else { 0.0 }
        })
        .collect();
    Dataset::from_matrix(y, x).unwrap()
}

pub fn random_beta(p: usize, scale: f64, seed: u64) -> Vec<f64> {
    let mut rng = RandomStream::new(seed).derive(7).rng();
    (0..p).map(|_| scale * (2.0 * rng.random::<f64>() - 1.0)).collect()
}

/// Log-likelihood as `y eta - log(1 + e^eta)`.
pub fn loglik(ds: &Dataset, beta: &[f64]) -> f64 {
    (0..ds.n())
        .map(|i| {
            let eta: f64 = (0..ds.d()).map(|j| ds.x()[(i, j)] * beta[j]).sum();
            let softplus = eta.max(0.0) + (-eta.abs()).exp().ln_1p();
            ds.y()[i] * eta - softplus
        })
        .sum()
}

/// Maximizes the log-likelihood one coordinate at a time, each coordinate
/// by bisection on its partial derivative.
pub fn coordinate_ascent_mle(ds: &Dataset, bound: f64) -> Option<Vec<f64>> {
    let (n, p) = (ds.n(), ds.d());
    let x = ds.x();
    let y = ds.y();
    let mut beta = vec![0.0; p];
    let mut eta = vec![0.0; n];
    for _ in 0..20_000 {
        let mut change = 0.0f64;
        for j in 0..p {
            let partial = |b: f64| -> f64 {
                (0..n)
                    .map(|i| x[(i, j)] * (y[i] - logistic(eta[i] + x[(i, j)] * (b - beta[j]))))
                    .sum()
            };
            let (mut lo, mut hi) = (-bound, bound);
            if partial(lo) <= 0.0 || partial(hi) >= 0.0 {
                return None;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid == lo || mid == hi {
                    break;
                }
                if partial(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let b = 0.5 * (lo + hi);
            for i in 0..n {
                eta[i] += x[(i, j)] * (b - beta[j]);
            }
            change = change.max((b - beta[j]).abs());
            beta[j] = b;
        }
        if change < 1e-12 {
            return Some(beta);
        }
    }
    None
}

/// Gradient of `-2 loglik`, by plain loops.
pub fn deviance_gradient(ds: &Dataset, beta: &[f64]) -> Vec<f64> {
    let (n, p) = (ds.n(), ds.d());
    let mut g = vec![0.0; p];
    for i in 0..n {
        let eta: f64 = (0..p).map(|j| ds.x()[(i, j)] * beta[j]).sum();
        let r = -2.0 * (ds.y()[i] - logistic(eta));
        for (j, gj) in g.iter_mut().enumerate() {
            *gj += ds.x()[(i, j)] * r;
        }
    }
    g
}

pub fn sample_sd(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)).sqrt()
}
