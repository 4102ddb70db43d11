//! Bias-corrected MLE by iterative bootstrap.
//!
//! Starting from the observed-data MLE `b0`, each iteration simulates `H`
//! response vectors from the submodel at the current iterate, refits the
//! MLE on each, and updates
//!
//! ```text
//! b(k) = b0 + b(k-1) - mean_h mle_h(b(k-1))
//! ```
//!
//! until `||b(k) - b(k-1)||_2 < epsilon`. The fixed point solves
//! `mle_obs = mean_h mle_h(b)`, the simulation version of the
//! indirect-inference equation.
//!
//! By default the same simulation streams are reused in every iteration
//! (common random numbers), which makes the recursion a deterministic map
//! whose limit is the simulated BC-MLE. Fresh draws per iteration are
//! available; the iterates then jitter at the Monte-Carlo noise level and
//! the loop usually runs to `k_max`.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Submodel};
use crate::error::{Error, Result};
use crate::glm::{fit_mle_xy, info_eta, linear_predictor, mean, MleFit, MleOptions, ParameterBox};
use crate::stream::RandomStream;

pub const DEFAULT_H: usize = 200;
pub const DEFAULT_K_MAX: usize = 50;
pub const DEFAULT_MC_RESOLUTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SimulationRandomness {
    /// Sample `h` reuses the same stream in every iteration.
    #[default]
    Common,
    /// New streams in every iteration.
    Fresh,
}

impl std::str::FromStr for SimulationRandomness {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "common" | "crn" => Ok(SimulationRandomness::Common),
            "fresh" => Ok(SimulationRandomness::Fresh),
            _ => Err(format!("unknown randomness {s:?} (common, fresh)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IbConfig {
    /// Simulated samples per iteration.
    pub h: usize,
    /// Convergence tolerance on `||b(k) - b(k-1)||_2`; `None` means `1e-4 sqrt(p)`.
    pub epsilon: Option<f64>,
    pub k_max: usize,
    /// Discarded simulated fits allowed per iteration; `None` means `10 H`.
    pub resim_limit: Option<usize>,
    pub stream: RandomStream,
    pub randomness: SimulationRandomness,
    /// Also stop once the root mean square of `step_j / se_j` is at most
    /// this value, where `se_j` is the Monte-Carlo standard error of the
    /// simulated mean of coordinate `j`; 0 disables.
    pub mc_resolution: f64,
    pub mle: MleOptions,
}

impl IbConfig {
    pub fn new(stream: RandomStream) -> Self {
        Self {
            h: DEFAULT_H,
            epsilon: None,
            k_max: DEFAULT_K_MAX,
            resim_limit: None,
            stream,
            randomness: SimulationRandomness::default(),
            mc_resolution: DEFAULT_MC_RESOLUTION,
            mle: MleOptions::default(),
        }
    }

    pub fn epsilon_for(&self, p: usize) -> f64 {
        self.epsilon.unwrap_or(1e-4 * (p as f64).sqrt())
    }

    pub fn resim_limit(&self) -> usize {
        self.resim_limit.unwrap_or(10 * self.h)
    }

    fn validate(&self) -> Result<()> {
        if self.h == 0 || self.k_max == 0 {
            return Err(Error::InvalidArgument("H and k_max must be at least 1".into()));
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0) {
                return Err(Error::InvalidArgument(format!("epsilon must be positive, got {e}")));
            }
        }
        if !(self.mc_resolution >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "mc_resolution must be non-negative, got {}",
                self.mc_resolution
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// `epsilon_k < epsilon`.
    Tolerance,
    /// The step fell below the Monte-Carlo resolution of the bias estimate.
    MonteCarloResolution,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IbTrace {
    /// `b(0)` (the observed MLE) through the final iterate.
    pub iterates: Vec<Vec<f64>>,
    /// `epsilon_k` for `k = 1..`.
    pub epsilons: Vec<f64>,
    pub skipped_samples: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub h: usize,
    pub epsilon: f64,
    pub randomness: SimulationRandomness,
    /// Standard error of the simulated mean in the last iteration, per coordinate.
    pub mc_standard_error: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct IbFit {
    /// The bias-corrected estimate (last iterate, inside the box).
    pub beta: Vec<f64>,
    /// `Sigma_n` at `beta`.
    pub info: DMatrix<f64>,
    /// MLE on the observed data.
    pub initial: MleFit,
    pub trace: IbTrace,
}

fn next_step(iterates: &[Vec<f64>]) -> Vec<f64> {
    let k = iterates.len() - 1;
    iterates[k].iter().zip(&iterates[k - 1]).map(|(a, b)| a - b).collect()
}

/// Root mean square of `step_j / se_j`; infinite when some `se_j` vanishes.
pub fn standardized_step(step: &[f64], se: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (d, s) in step.iter().zip(se) {
        if !(*s > 0.0) {
            return f64::INFINITY;
        }
        acc += (d / s) * (d / s);
    }
    (acc / step.len() as f64).sqrt()
}

/// Independent Bernoulli draws with means `g(x_i' gamma)`.
pub fn simulate_responses(x: &DMatrix<f64>, gamma: &[f64], stream: &RandomStream) -> Vec<f64> {
    let eta = linear_predictor(x, gamma);
    simulate_from_eta(&eta, stream)
}

fn simulate_from_eta(eta: &[f64], stream: &RandomStream) -> Vec<f64> {
    let mut rng = stream.rng();
    eta.iter()
        .map(|&e| {
            let u: f64 = rng.random();
            if u < mean(e) { 1.0 } else { 0.0 }
        })
        .collect()
}

/// Simulates at `eta` and fits, redrawing failed samples from sibling
/// streams. Returns the estimate (if any attempt succeeded) and the number
/// of discarded draws.
fn simulated_mle(
    x: &DMatrix<f64>,
    eta: &[f64],
    warm: &[f64],
    sample_stream: &RandomStream,
    bounds: &ParameterBox,
    options: &MleOptions,
    max_attempts: usize,
) -> (Option<Vec<f64>>, usize) {
    for attempt in 0..max_attempts {
        let y = simulate_from_eta(eta, &sample_stream.derive(attempt as u64));
        match fit_mle_xy(x, &y, Some(warm), bounds, options) {
            Ok(fit) if fit.converged => return (Some(fit.beta), attempt),
            _ => continue,
        }
    }
    (None, max_attempts)
}

/// Runs the iterative bootstrap on `dataset` restricted to `s`.
pub fn ib_fit(
    dataset: &Dataset,
    s: &Submodel,
    config: &IbConfig,
    bounds: &ParameterBox,
) -> Result<IbFit> {
    let restricted = dataset.restrict(s)?;
    ib_fit_design(restricted.x(), restricted.y(), config, bounds)
}

/// Iterative bootstrap on an already restricted design.
pub fn ib_fit_design(
    x: &DMatrix<f64>,
    y: &[f64],
    config: &IbConfig,
    bounds: &ParameterBox,
) -> Result<IbFit> {
    config.validate()?;
    let p = x.ncols();
    let initial = match fit_mle_xy(x, y, None, bounds, &config.mle) {
        Ok(fit) if fit.converged => fit,
        Ok(fit) => {
            return Err(Error::InitialMleFailed(format!(
                "no convergence after {} iterations (score {:.3e})",
                fit.iterations, fit.score_norm
            )))
        }
        Err(e) => return Err(Error::InitialMleFailed(e.to_string())),
    };
    let epsilon = config.epsilon_for(p);
    let limit = config.resim_limit();
    let h = config.h;
    let b0 = initial.beta.clone();

    let mut iterates = vec![b0.clone()];
    let mut epsilons = Vec::new();
    let mut skipped_total = 0;
    let mut stop_reason = StopReason::MaxIterations;
    let mut mc_se = vec![0.0; p];
    let mut prev = b0.clone();

    for k in 1..=config.k_max {
        let eta = linear_predictor(x, &prev);
        let iteration_stream = match config.randomness {
            SimulationRandomness::Common => config.stream.derive(0),
            SimulationRandomness::Fresh => config.stream.derive(k as u64),
        };
        let draws: Vec<(Option<Vec<f64>>, usize)> = (0..h)
            .into_par_iter()
            .map(|i| {
                simulated_mle(
                    x,
                    &eta,
                    &prev,
                    &iteration_stream.derive(i as u64),
                    bounds,
                    &config.mle,
                    limit + 1,
                )
            })
            .collect();
        let skipped: usize = draws.iter().map(|(_, s)| s).sum();
        skipped_total += skipped;
        if skipped > limit {
            return Err(Error::TooManySkippedSamples { skipped, limit });
        }

        let mut sum = vec![0.0; p];
        let mut sum_sq = vec![0.0; p];
        for (est, _) in &draws {
            let est = est.as_ref().expect("within the resimulation limit");
            for j in 0..p {
                sum[j] += est[j];
                sum_sq[j] += est[j] * est[j];
            }
        }
        let hf = h as f64;
        for j in 0..p {
            let m = sum[j] / hf;
            let var = if h > 1 {
                ((sum_sq[j] - hf * m * m) / (hf - 1.0)).max(0.0)
            } else {
                0.0
            };
            mc_se[j] = (var / hf).sqrt();
        }
        let next: Vec<f64> = (0..p)
            .map(|j| bounds.clamp(b0[j] + prev[j] - sum[j] / hf))
            .collect();
        let eps = next
            .iter()
            .zip(&prev)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        epsilons.push(eps);
        iterates.push(next.clone());
        prev = next;
        if eps < epsilon {
            stop_reason = StopReason::Tolerance;
            break;
        }
        if config.mc_resolution > 0.0 && standardized_step(&next_step(&iterates), &mc_se) <= config.mc_resolution {
            stop_reason = StopReason::MonteCarloResolution;
            break;
        }
    }
    let converged = stop_reason != StopReason::MaxIterations;
    if !converged {
        log::warn!(
            "iterative bootstrap stopped at k_max = {} with epsilon_k = {:.3e} (target {:.3e})",
            config.k_max,
            epsilons.last().copied().unwrap_or(f64::NAN),
            epsilon
        );
    }

    let info = info_eta(x, &linear_predictor(x, &prev));
    Ok(IbFit {
        beta: prev,
        info,
        initial,
        trace: IbTrace {
            iterates,
            epsilons,
            skipped_samples: skipped_total,
            converged,
            stop_reason,
            h,
            epsilon,
            randomness: config.randomness,
            mc_standard_error: mc_se,
        },
    })
}

/// `||mle_obs - mean_h mle_h(beta_hat)||_2` over `h_check` fresh samples.
/// Vanishes (up to Monte-Carlo error) at the exact bias-corrected estimate.
pub fn fixed_point_residual(
    dataset: &Dataset,
    s: &Submodel,
    beta_hat: &[f64],
    h_check: usize,
    stream: &RandomStream,
    bounds: &ParameterBox,
) -> Result<f64> {
    if h_check == 0 {
        return Err(Error::InvalidArgument("H_check must be at least 1".into()));
    }
    let restricted = dataset.restrict(s)?;
    let (x, y) = (restricted.x(), restricted.y());
    let options = MleOptions::default();
    let observed = fit_mle_xy(x, y, None, bounds, &options)
        .map_err(|e| Error::InitialMleFailed(e.to_string()))?;
    let eta = linear_predictor(x, beta_hat);
    let limit = 10 * h_check;
    let draws: Vec<(Option<Vec<f64>>, usize)> = (0..h_check)
        .into_par_iter()
        .map(|i| {
            simulated_mle(x, &eta, beta_hat, &stream.derive(i as u64), bounds, &options, limit + 1)
        })
        .collect();
    let skipped: usize = draws.iter().map(|(_, s)| s).sum();
    if skipped > limit {
        return Err(Error::TooManySkippedSamples { skipped, limit });
    }
    let p = x.ncols();
    let mut sum = vec![0.0; p];
    for (est, _) in &draws {
        for (acc, v) in sum.iter_mut().zip(est.as_ref().expect("within limit")) {
            *acc += v;
        }
    }
    Ok(observed
        .beta
        .iter()
        .zip(&sum)
        .map(|(o, s)| {
            let r = o - s / h_check as f64;
            r * r
        })
        .sum::<f64>()
        .sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardized_step_is_rms_and_scale_free() {
        assert_eq!(standardized_step(&[3.0, -4.0], &[1.0, 1.0]), (12.5f64).sqrt());
        assert_eq!(standardized_step(&[0.6, 0.8], &[0.2, 0.4]), standardized_step(&[3.0, 2.0], &[1.0, 1.0]));
        assert_eq!(standardized_step(&[1.0], &[0.0]), f64::INFINITY);
    }

    #[test]
    fn zero_gamma_gives_fair_coins() {
        let x = DMatrix::from_element(10_000, 1, 1.0);
        let y = simulate_responses(&x, &[0.0], &RandomStream::new(5));
        let m = y.iter().sum::<f64>() / y.len() as f64;
        assert!((m - 0.5).abs() < 0.02, "{m}");
        assert!(y.iter().all(|&v| v == 0.0 || v == 1.0));
    }

    #[test]
    fn saturated_gamma_gives_ones() {
        let x = DMatrix::from_element(1000, 1, 1.0);
        let y = simulate_responses(&x, &[30.0], &RandomStream::new(6));
        assert!(y.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn same_stream_same_draws() {
        let x = DMatrix::from_fn(50, 2, |i, j| ((i * 7 + j * 3) % 11) as f64 / 5.0 - 1.0);
        let s = RandomStream::new(1).derive(4);
        assert_eq!(
            simulate_responses(&x, &[0.3, -0.2], &s),
            simulate_responses(&x, &[0.3, -0.2], &s)
        );
    }

    #[test]
    fn config_defaults() {
        let c = IbConfig::new(RandomStream::new(0));
        assert_eq!(c.h, 200);
        assert_eq!(c.k_max, 50);
        assert_eq!(c.resim_limit(), 2000);
        assert!((c.epsilon_for(16) - 4e-4).abs() < 1e-18);
        let bad = IbConfig {
            h: 0,
            ..c
        };
        assert!(bad.validate().is_err());
    }
}
