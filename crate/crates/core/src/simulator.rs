//! Simulation settings and the Monte-Carlo harness.
//!
//! Covariates are Gaussian with AR(1) correlation `rho^|k-l|`. The true
//! coefficient vector has five signals of 0.25 at (0-based) columns
//! 3, 7, 11, 15, 19 and, for `d0 > 5`, further signals of
//! `3 / (4 sqrt(d0/5 - 1))` at columns 23, 27, ..., `4 d0 - 1`.
//!
//! Replication `rep` owns the stream `master.derive(rep)`: its data come
//! from child 0 (covariates from 0/0, responses from 0/1), the sample
//! split from child 1, and the bootstrap from child 2. Replications can
//! therefore run in any order and on any number of threads.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bcmle::{IbConfig, SimulationRandomness, DEFAULT_H, DEFAULT_K_MAX, DEFAULT_MC_RESOLUTION};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::glm::{linear_predictor, mean, MleOptions, ParameterBox, DEFAULT_BOX_BOUND};
use crate::inference::{p_value, silab_fit_on_submodel, Alternative, DEFAULT_ALPHA_GRID};
use crate::lasso::{LassoOptions, DEFAULT_GRID_SIZE};
use crate::sila::{sila_select, DeltaSpec, InclusionMode, SilaConfig};
use crate::stats;
use crate::stream::RandomStream;

const STRONG_SIGNAL_START: usize = 23;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSetting {
    pub n: usize,
    pub d: usize,
    pub d0: usize,
    pub rho: f64,
    pub replications: usize,
    pub master_seed: u64,
}

impl SimSetting {
    pub fn validate(&self) -> Result<()> {
        if self.n < 20 || self.d == 0 || self.replications == 0 {
            return Err(Error::InvalidArgument(format!(
                "need n >= 20, d >= 1 and at least one replication (n = {}, d = {}, replications = {})",
                self.n, self.d, self.replications
            )));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::InvalidArgument(format!("rho must lie in [0, 1), got {}", self.rho)));
        }
        check_sparsity(self.d, self.d0)
    }

    pub fn master_stream(&self) -> RandomStream {
        RandomStream::new(self.master_seed)
    }

    pub fn rep_stream(&self, rep: usize) -> RandomStream {
        self.master_stream().derive(rep as u64)
    }
}

fn check_sparsity(d: usize, d0: usize) -> Result<()> {
    if d0 == 0 || (d0.is_multiple_of(5) && 4 * d0 <= d) {
        Ok(())
    } else {
        Err(Error::InvalidSparsity { d, d0 })
    }
}

pub fn gen_beta_star(d: usize, d0: usize) -> Result<Vec<f64>> {
    check_sparsity(d, d0)?;
    let mut beta = vec![0.0; d];
    if d0 == 0 {
        return Ok(beta);
    }
    for j in [3, 7, 11, 15, 19] {
        beta[j] = 0.25;
    }
    if d0 > 5 {
        let amp = 3.0 / (4.0 * (d0 as f64 / 5.0 - 1.0).sqrt());
        for j in (STRONG_SIGNAL_START..4 * d0).step_by(4) {
            beta[j] = amp;
        }
    }
    Ok(beta)
}

/// Indices of the nonzero entries of `beta`.
pub fn true_support(beta: &[f64]) -> Vec<usize> {
    (0..beta.len()).filter(|&j| beta[j] != 0.0).collect()
}

/// `n` independent rows of an AR(1) Gaussian vector, by the recursion
/// `x_k = rho x_{k-1} + sqrt(1 - rho^2) z_k`.
pub fn gen_covariates(n: usize, d: usize, rho: f64, stream: &RandomStream) -> DMatrix<f64> {
    let mut rng = stream.rng();
    let innov = (1.0 - rho * rho).sqrt();
    let mut x = DMatrix::zeros(n, d);
    for i in 0..n {
        let mut prev = 0.0;
        for k in 0..d {
            let z: f64 = rng.sample(StandardNormal);
            let v = if k == 0 { z } else { rho * prev + innov * z };
            x[(i, k)] = v;
            prev = v;
        }
    }
    x
}

/// Bernoulli responses with means `g(x_i' beta)`.
pub fn gen_responses(x: &DMatrix<f64>, beta: &[f64], stream: &RandomStream) -> Vec<f64> {
    let eta = linear_predictor(x, beta);
    let mut rng = stream.rng();
    eta.iter()
        .map(|&e| {
            let u: f64 = rng.random();
            if u < mean(e) { 1.0 } else { 0.0 }
        })
        .collect()
}

/// Replication `rep` of `setting`, with the true coefficients.
pub fn gen_dataset(setting: &SimSetting, rep: usize) -> Result<(Dataset, Vec<f64>)> {
    if rep >= setting.replications {
        return Err(Error::InvalidArgument(format!(
            "replication {rep} out of range ({} replications)",
            setting.replications
        )));
    }
    let beta = gen_beta_star(setting.d, setting.d0)?;
    let data = setting.rep_stream(rep).derive(0);
    let x = gen_covariates(setting.n, setting.d, setting.rho, &data.derive(0));
    let y = gen_responses(&x, &beta, &data.derive(1));
    Ok((Dataset::from_matrix(y, x)?, beta))
}

/// Tuning of the procedure under study; streams are supplied per replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodConfig {
    pub j0: usize,
    pub delta1: DeltaSpec,
    pub delta2: DeltaSpec,
    pub grid_size: usize,
    pub inclusion_mode: InclusionMode,
    pub lasso: LassoOptions,
    pub h: usize,
    pub epsilon: Option<f64>,
    pub k_max: usize,
    pub randomness: SimulationRandomness,
    pub mc_resolution: f64,
    pub box_bound: f64,
}

impl Default for MethodConfig {
    fn default() -> Self {
        Self {
            j0: 3,
            delta1: DeltaSpec::Auto,
            delta2: DeltaSpec::Auto,
            grid_size: DEFAULT_GRID_SIZE,
            inclusion_mode: InclusionMode::default(),
            lasso: LassoOptions::default(),
            h: DEFAULT_H,
            epsilon: None,
            k_max: DEFAULT_K_MAX,
            randomness: SimulationRandomness::default(),
            mc_resolution: DEFAULT_MC_RESOLUTION,
            box_bound: DEFAULT_BOX_BOUND,
        }
    }
}

impl MethodConfig {
    pub fn sila_config(&self, split_stream: RandomStream) -> SilaConfig {
        SilaConfig {
            delta1: self.delta1,
            delta2: self.delta2,
            grid_size: self.grid_size,
            inclusion_mode: self.inclusion_mode,
            split_stream,
            lasso: self.lasso,
        }
    }

    pub fn ib_config(&self, stream: RandomStream) -> IbConfig {
        IbConfig {
            h: self.h,
            epsilon: self.epsilon,
            k_max: self.k_max,
            resim_limit: None,
            stream,
            randomness: self.randomness,
            mc_resolution: self.mc_resolution,
            mle: MleOptions::default(),
        }
    }

    pub fn parameter_box(&self) -> Result<ParameterBox> {
        ParameterBox::new(self.box_bound)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSpec {
    pub name: String,
    pub null_value: f64,
    pub alternative: Alternative,
}

/// Size test (`beta_j0 = 0.25` against `> 0.25`) and power test (`= 0` against `> 0`).
pub fn default_tests() -> Vec<TestSpec> {
    vec![
        TestSpec {
            name: "test1".into(),
            null_value: 0.25,
            alternative: Alternative::Greater,
        },
        TestSpec {
            name: "test2".into(),
            null_value: 0.0,
            alternative: Alternative::Greater,
        },
    ]
}

pub fn default_alpha_grid() -> Vec<f64> {
    DEFAULT_ALPHA_GRID.to_vec()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmEstimate {
    pub estimate: f64,
    pub sigma_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepRecord {
    pub rep: usize,
    pub submodel_size: usize,
    /// Whether the true support is contained in the selected submodel.
    pub screened: bool,
    pub bc_mle: ArmEstimate,
    pub mle: ArmEstimate,
    pub ib_converged: bool,
    pub ib_iterations: usize,
    pub skipped_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepFailure {
    pub rep: usize,
    pub stage: String,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepTiming {
    pub rep: usize,
    pub selection_s: f64,
    pub bias_correction_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub arm: String,
    pub mean_estimate: f64,
    pub bias: f64,
    pub bias_mc_se: f64,
    pub variance: f64,
    pub mean_sigma2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionRate {
    pub test: String,
    pub arm: String,
    pub alpha: f64,
    /// Among successful replications.
    pub rejection_rate: f64,
    pub mc_se: f64,
    pub n_effective: usize,
    /// Over all replications, counting failures as non-rejections.
    pub unconditional_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McAggregates {
    pub replications: usize,
    pub successes: usize,
    pub failure_fraction: f64,
    pub truth: f64,
    pub screening_rate: f64,
    pub screening_rate_unconditional: f64,
    pub mean_submodel_size: f64,
    pub arms: Vec<ArmSummary>,
    pub rejection_rates: Vec<RejectionRate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub setting: SimSetting,
    pub method: MethodConfig,
    pub tests: Vec<TestSpec>,
    pub alpha_grid: Vec<f64>,
    pub records: Vec<RepRecord>,
    pub failures: Vec<RepFailure>,
    pub aggregates: McAggregates,
    #[serde(skip)]
    pub timings: Vec<RepTiming>,
}

pub const ARM_BC: &str = "bc_mle";
pub const ARM_MLE: &str = "mle";

impl McReport {
    pub fn arm(&self, name: &str) -> Option<&ArmSummary> {
        self.aggregates.arms.iter().find(|a| a.arm == name)
    }

    pub fn rejection_rate(&self, test: &str, arm: &str, alpha: f64) -> Option<&RejectionRate> {
        self.aggregates
            .rejection_rates
            .iter()
            .find(|r| r.test == test && r.arm == arm && r.alpha == alpha)
    }

    /// Studentized statistics `sqrt(n) (estimate - truth) / sigma_hat` of an arm.
    pub fn studentized(&self, arm: &str) -> Vec<f64> {
        let rn = (self.setting.n as f64).sqrt();
        let truth = self.aggregates.truth;
        self.records
            .iter()
            .map(|r| {
                let a = if arm == ARM_MLE { r.mle } else { r.bc_mle };
                rn * (a.estimate - truth) / a.sigma_hat
            })
            .collect()
    }
}

pub(crate) fn failure_from(rep: usize, e: &Error) -> RepFailure {
    let stage = match e {
        Error::Stage { stage, .. } => stage.to_string(),
        _ => "data".to_string(),
    };
    RepFailure {
        rep,
        stage,
        reason: e.root().to_string(),
    }
}

/// Runs one replication: data, selection, bias correction.
pub fn run_replication(
    setting: &SimSetting,
    method: &MethodConfig,
    rep: usize,
) -> (std::result::Result<RepRecord, RepFailure>, RepTiming) {
    let start = Instant::now();
    let mut timing = RepTiming {
        rep,
        selection_s: 0.0,
        bias_correction_s: 0.0,
        total_s: 0.0,
    };
    let outcome = (|| -> Result<RepRecord> {
        let (dataset, beta) = gen_dataset(setting, rep)?;
        let stream = setting.rep_stream(rep);
        let bounds = method.parameter_box()?;
        let t0 = Instant::now();
        let (submodel, _) = sila_select(&dataset, method.j0, &method.sila_config(stream.derive(1)))
            .map_err(|e| e.at_stage("selection"))?;
        timing.selection_s = t0.elapsed().as_secs_f64();
        let t1 = Instant::now();
        let fit = silab_fit_on_submodel(&dataset, &submodel, method.j0, &method.ib_config(stream.derive(2)), &bounds)?;
        timing.bias_correction_s = t1.elapsed().as_secs_f64();
        let screened = true_support(&beta).iter().all(|&j| submodel.contains(j));
        Ok(RepRecord {
            rep,
            submodel_size: submodel.len(),
            screened,
            bc_mle: ArmEstimate {
                estimate: fit.beta_j0,
                sigma_hat: fit.sigma2_j0.sqrt(),
            },
            mle: ArmEstimate {
                estimate: fit.mle.beta_j0,
                sigma_hat: fit.mle.sigma2_j0.sqrt(),
            },
            ib_converged: fit.trace.ib.converged,
            ib_iterations: fit.trace.ib.epsilons.len(),
            skipped_samples: fit.trace.ib.skipped_samples,
        })
    })();
    timing.total_s = start.elapsed().as_secs_f64();
    (outcome.map_err(|e| failure_from(rep, &e)), timing)
}

/// Runs the listed replications in parallel; output is sorted by replication.
pub fn run_replications(
    setting: &SimSetting,
    method: &MethodConfig,
    reps: &[usize],
) -> Vec<(std::result::Result<RepRecord, RepFailure>, RepTiming)> {
    let done = AtomicUsize::new(0);
    let total = reps.len();
    let batch = (total / 10).max(1);
    let mut out: Vec<_> = reps
        .par_iter()
        .map(|&rep| {
            let r = run_replication(setting, method, rep);
            let k = done.fetch_add(1, Ordering::Relaxed) + 1;
            if k.is_multiple_of(batch) || k == total {
                log::info!("replications: {k}/{total} done");
            }
            r
        })
        .collect();
    out.sort_by_key(|(_, t)| t.rep);
    out
}

pub fn run_monte_carlo(
    setting: &SimSetting,
    method: &MethodConfig,
    tests: &[TestSpec],
    alpha_grid: &[f64],
) -> Result<McReport> {
    setting.validate()?;
    if method.j0 >= setting.d {
        return Err(Error::IndexOutOfRange {
            index: method.j0,
            d: setting.d,
        });
    }
    if let Some(&a) = alpha_grid.iter().find(|&&a| !(a > 0.0 && a < 1.0)) {
        return Err(Error::InvalidAlpha(a));
    }
    let reps: Vec<usize> = (0..setting.replications).collect();
    let outcomes = run_replications(setting, method, &reps);
    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut timings = Vec::new();
    for (o, t) in outcomes {
        match o {
            Ok(r) => records.push(r),
            Err(f) => {
                log::warn!("replication {} failed at {}: {}", f.rep, f.stage, f.reason);
                failures.push(f)
            }
        }
        timings.push(t);
    }
    let aggregates = aggregate(setting, method, tests, alpha_grid, &records, failures.len())?;
    Ok(McReport {
        setting: setting.clone(),
        method: method.clone(),
        tests: tests.to_vec(),
        alpha_grid: alpha_grid.to_vec(),
        records,
        failures,
        aggregates,
        timings,
    })
}

/// Summaries computed from the per-replication records alone.
pub fn aggregate(
    setting: &SimSetting,
    method: &MethodConfig,
    tests: &[TestSpec],
    alpha_grid: &[f64],
    records: &[RepRecord],
    failure_count: usize,
) -> Result<McAggregates> {
    let truth = gen_beta_star(setting.d, setting.d0)?[method.j0];
    let total = records.len() + failure_count;
    let m = records.len();
    let rate = |k: usize, of: usize| if of == 0 { f64::NAN } else { k as f64 / of as f64 };
    let screened = records.iter().filter(|r| r.screened).count();
    let arms = [(ARM_BC, false), (ARM_MLE, true)]
        .iter()
        .map(|&(name, mle)| {
            let pick = |r: &RepRecord| if mle { r.mle } else { r.bc_mle };
            let est: Vec<f64> = records.iter().map(|r| pick(r).estimate).collect();
            let s2: Vec<f64> = records.iter().map(|r| pick(r).sigma_hat.powi(2)).collect();
            let mean_estimate = stats::mean(&est);
            ArmSummary {
                arm: name.to_string(),
                mean_estimate,
                bias: mean_estimate - truth,
                bias_mc_se: stats::mean_se(&est),
                variance: stats::variance(&est),
                mean_sigma2: stats::mean(&s2),
            }
        })
        .collect();
    let rn = (setting.n as f64).sqrt();
    let mut rejection_rates = Vec::new();
    for (arm, mle) in [(ARM_BC, false), (ARM_MLE, true)] {
        for t in tests {
            let pvals: Vec<f64> = records
                .iter()
                .map(|r| {
                    let a = if mle { r.mle } else { r.bc_mle };
                    p_value(rn * (a.estimate - t.null_value) / a.sigma_hat, t.alternative)
                })
                .collect();
            for &alpha in alpha_grid {
                let k = pvals.iter().filter(|&&p| p < alpha).count();
                let r = rate(k, m);
                rejection_rates.push(RejectionRate {
                    test: t.name.clone(),
                    arm: arm.to_string(),
                    alpha,
                    rejection_rate: r,
                    mc_se: stats::proportion_se(r, m),
                    n_effective: m,
                    unconditional_rate: rate(k, total),
                });
            }
        }
    }
    Ok(McAggregates {
        replications: total,
        successes: m,
        failure_fraction: rate(failure_count, total),
        truth,
        screening_rate: rate(screened, m),
        screening_rate_unconditional: rate(screened, total),
        mean_submodel_size: stats::mean(&records.iter().map(|r| r.submodel_size as f64).collect::<Vec<_>>()),
        arms,
        rejection_rates,
    })
}

/// `test, alpha, rejection_rate, mc_se, n_effective` for the bias-corrected arm.
pub fn write_size_power_csv(report: &McReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["test", "alpha", "rejection_rate", "mc_se", "n_effective"])?;
    for r in report.aggregates.rejection_rates.iter().filter(|r| r.arm == ARM_BC) {
        w.write_record([
            r.test.clone(),
            r.alpha.to_string(),
            r.rejection_rate.to_string(),
            r.mc_se.to_string(),
            r.n_effective.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per replication and estimator arm.
pub fn write_estimates_csv(report: &McReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["rep", "estimator_arm", "beta4_hat", "sigma_hat", "submodel_size", "screened"])?;
    for r in &report.records {
        for (arm, a) in [(ARM_BC, r.bc_mle), (ARM_MLE, r.mle)] {
            w.write_record([
                r.rep.to_string(),
                arm.to_string(),
                a.estimate.to_string(),
                a.sigma_hat.to_string(),
                r.submodel_size.to_string(),
                u8::from(r.screened).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_star_pattern() {
        let b = gen_beta_star(400, 20).unwrap();
        assert_eq!(b[3], 0.25);
        assert!((b[23] - 3.0 / (4.0 * 3f64.sqrt())).abs() < 1e-15);
        assert!((b[23] - 0.4330).abs() < 1e-4);
        assert_eq!(b[4], 0.0);
        assert_eq!(b[79], b[23]);
        assert_eq!(b[83], 0.0);
        for d0 in [20, 30, 40] {
            assert_eq!(true_support(&gen_beta_star(400, d0).unwrap()).len(), d0);
        }
        let b5 = gen_beta_star(20, 5).unwrap();
        assert_eq!(true_support(&b5), vec![3, 7, 11, 15, 19]);
        assert!(gen_beta_star(400, 0).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sparsity_errors() {
        assert!(matches!(gen_beta_star(400, 7), Err(Error::InvalidSparsity { .. })));
        assert!(matches!(gen_beta_star(79, 20), Err(Error::InvalidSparsity { .. })));
    }

    fn corr(a: &[f64], b: &[f64]) -> f64 {
        let (ma, mb) = (stats::mean(a), stats::mean(b));
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
        cov / (va * vb).sqrt()
    }

    #[test]
    fn ar1_correlations() {
        let n = 4000;
        let band = 3.0 / (n as f64).sqrt();
        let x = gen_covariates(n, 6, 0.4, &RandomStream::new(8));
        let col = |k: usize| x.column(k).iter().copied().collect::<Vec<_>>();
        for k in 0..4 {
            assert!((corr(&col(k), &col(k + 1)) - 0.4).abs() < band);
            assert!((corr(&col(k), &col(k + 2)) - 0.16).abs() < band);
        }
        let v = stats::variance(&col(5));
        assert!((v - 1.0).abs() < 0.1);
        let x0 = gen_covariates(n, 3, 0.0, &RandomStream::new(9));
        let c0: Vec<f64> = x0.column(0).iter().copied().collect();
        let c1: Vec<f64> = x0.column(1).iter().copied().collect();
        assert!(corr(&c0, &c1).abs() < band);
        assert_eq!(gen_covariates(5, 3, 0.2, &RandomStream::new(1)), gen_covariates(5, 3, 0.2, &RandomStream::new(1)));
    }

    #[test]
    fn datasets_are_reproducible() {
        let s = SimSetting {
            n: 50,
            d: 20,
            d0: 0,
            rho: 0.0,
            replications: 3,
            master_seed: 4,
        };
        let (a, beta) = gen_dataset(&s, 1).unwrap();
        let (b, _) = gen_dataset(&s, 1).unwrap();
        assert_eq!(a.y(), b.y());
        assert_eq!(a.x(), b.x());
        assert!(beta.iter().all(|&v| v == 0.0));
        assert!(gen_dataset(&s, 3).is_err());
    }
}
