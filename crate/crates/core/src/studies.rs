//! Targeted Monte-Carlo experiments: estimator bias on a fixed design, and
//! selection quality of the split-intersection rule.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bcmle::SimulationRandomness;
use crate::data::{Dataset, Submodel};
use crate::error::Result;
use crate::glm::{info_eta, linear_predictor, plugin_variance_from_info, unit_vector, ParameterBox};
use crate::inference::silab_fit_on_submodel;
use crate::sila::{single_lasso_select, sila_select};
use crate::simulator::{
    failure_from, gen_beta_star, gen_covariates, gen_dataset, gen_responses, true_support, MethodConfig,
    RepFailure, SimSetting,
};
use crate::stats::{self, SignTestResult};
use crate::stream::RandomStream;

/// Stream tag reserved for the fixed design, outside the replication range.
const DESIGN_TAG: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasStudy {
    pub n: usize,
    pub p: usize,
    /// Sparsity of the true coefficients (see [`gen_beta_star`]).
    pub d0: usize,
    pub j0: usize,
    pub replications: usize,
    pub master_seed: u64,
    pub h: usize,
    pub randomness: SimulationRandomness,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasRecord {
    pub rep: usize,
    pub mle: f64,
    pub bc_mle: f64,
    pub mle_sigma2: f64,
    pub bc_sigma2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanWithSe {
    pub mean: f64,
    pub mc_se: f64,
}

impl MeanWithSe {
    fn of(v: &[f64]) -> Self {
        Self {
            mean: stats::mean(v),
            mc_se: stats::mean_se(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub study: BiasStudy,
    pub truth: f64,
    /// `n {Sigma_n(beta*)^-1}_{j0 j0}` on the fixed design.
    pub sigma2_true: f64,
    pub records: Vec<BiasRecord>,
    pub failures: Vec<RepFailure>,
    pub mle: MeanWithSe,
    pub bc_mle: MeanWithSe,
    pub mle_sigma2: MeanWithSe,
    pub bc_sigma2: MeanWithSe,
}

/// Gaussian design with every column centered and scaled to unit sample variance.
pub fn standardized_design(n: usize, p: usize, stream: &RandomStream) -> DMatrix<f64> {
    let mut x = gen_covariates(n, p, 0.0, stream);
    for mut col in x.column_iter_mut() {
        let v: Vec<f64> = col.iter().copied().collect();
        let (m, s) = (stats::mean(&v), stats::variance(&v).sqrt());
        for e in col.iter_mut() {
            *e = (*e - m) / s;
        }
    }
    x
}

/// Repeated fits of the full `p`-column model on one fixed design; only
/// the responses are redrawn.
pub fn run_bias_study(study: &BiasStudy) -> Result<BiasReport> {
    let master = RandomStream::new(study.master_seed);
    let x = standardized_design(study.n, study.p, &master.derive(DESIGN_TAG));
    let beta = gen_beta_star(study.p, study.d0)?;
    let truth = beta[study.j0];
    let info = info_eta(&x, &linear_predictor(&x, &beta));
    let sigma2_true = plugin_variance_from_info(&info, &unit_vector(study.p, study.j0), study.n)?;
    let submodel = Submodel::full(study.p);
    let bounds = ParameterBox::default();
    let method = MethodConfig {
        h: study.h,
        randomness: study.randomness,
        ..MethodConfig::default()
    };

    let outcomes: Vec<std::result::Result<BiasRecord, RepFailure>> = (0..study.replications)
        .into_par_iter()
        .map(|rep| {
            let rs = master.derive(rep as u64);
            let run = || -> Result<BiasRecord> {
                let y = gen_responses(&x, &beta, &rs.derive(0));
                let ds = Dataset::from_matrix(y, x.clone())?;
                let fit = silab_fit_on_submodel(&ds, &submodel, study.j0, &method.ib_config(rs.derive(2)), &bounds)?;
                Ok(BiasRecord {
                    rep,
                    mle: fit.mle.beta_j0,
                    bc_mle: fit.beta_j0,
                    mle_sigma2: fit.mle.sigma2_j0,
                    bc_sigma2: fit.sigma2_j0,
                })
            };
            run().map_err(|e| failure_from(rep, &e))
        })
        .collect();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => records.push(r),
            Err(f) => failures.push(f),
        }
    }
    let col = |f: fn(&BiasRecord) -> f64| records.iter().map(f).collect::<Vec<f64>>();
    Ok(BiasReport {
        truth,
        sigma2_true,
        mle: MeanWithSe::of(&col(|r| r.mle)),
        bc_mle: MeanWithSe::of(&col(|r| r.bc_mle)),
        mle_sigma2: MeanWithSe::of(&col(|r| r.mle_sigma2)),
        bc_sigma2: MeanWithSe::of(&col(|r| r.bc_sigma2)),
        study: study.clone(),
        records,
        failures,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionRecord {
    pub rep: usize,
    pub submodel_size: usize,
    pub screened: bool,
    pub j0_selected: bool,
    /// Selected columns outside the true support, `j0` excluded.
    pub spurious: usize,
    /// Same count for the single full-sample Lasso, when compared.
    pub single_lasso_spurious: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub setting: SimSetting,
    pub records: Vec<SelectionRecord>,
    pub failures: Vec<RepFailure>,
    pub failure_fraction: f64,
    pub screening_rate: f64,
    pub below_half_n_rate: f64,
    pub j0_rate: f64,
    pub mean_spurious: f64,
    pub mean_single_lasso_spurious: Option<f64>,
    /// Sign test of "single Lasso selects more spurious columns".
    pub sign_test: Option<SignTestResult>,
}

/// SILA on every replication of `setting`, optionally against one
/// AIC-tuned Lasso on the whole sample over the same bracketed grid.
pub fn run_selection_study(
    setting: &SimSetting,
    method: &MethodConfig,
    single_lasso_aic_penalty: Option<f64>,
) -> Result<SelectionReport> {
    setting.validate()?;
    let outcomes: Vec<std::result::Result<SelectionRecord, RepFailure>> = (0..setting.replications)
        .into_par_iter()
        .map(|rep| {
            let run = || -> Result<SelectionRecord> {
                let (ds, beta) = gen_dataset(setting, rep)?;
                let support = true_support(&beta);
                let cfg = method.sila_config(setting.rep_stream(rep).derive(1));
                let (s, trace) = sila_select(&ds, method.j0, &cfg).map_err(|e| e.at_stage("selection"))?;
                let spurious_in = |sel: &[usize]| {
                    sel.iter()
                        .filter(|&&j| j != method.j0 && support.binary_search(&j).is_err())
                        .count()
                };
                let single = match single_lasso_aic_penalty {
                    Some(pen) => Some(spurious_in(
                        &single_lasso_select(&ds, trace.deltas.0, trace.deltas.1, method.grid_size, pen, &method.lasso)
                            .map_err(|e| e.at_stage("single_lasso"))?,
                    )),
                    None => None,
                };
                Ok(SelectionRecord {
                    rep,
                    submodel_size: s.len(),
                    screened: support.iter().all(|&j| s.contains(j)),
                    j0_selected: s.contains(method.j0),
                    spurious: spurious_in(s.indices()),
                    single_lasso_spurious: single,
                })
            };
            run().map_err(|e| failure_from(rep, &e))
        })
        .collect();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => records.push(r),
            Err(f) => failures.push(f),
        }
    }
    let m = records.len() as f64;
    let frac = |f: fn(&SelectionRecord) -> bool| records.iter().filter(|r| f(r)).count() as f64 / m;
    let half_n = setting.n as f64 / 2.0;
    let below_half_n_rate =
        records.iter().filter(|r| (r.submodel_size as f64) < half_n).count() as f64 / m;
    let mean_spurious = records.iter().map(|r| r.spurious as f64).sum::<f64>() / m;
    let (mean_single, sign) = if single_lasso_aic_penalty.is_some() {
        let diffs: Vec<f64> = records
            .iter()
            .map(|r| r.single_lasso_spurious.unwrap_or(0) as f64 - r.spurious as f64)
            .collect();
        let single = records
            .iter()
            .map(|r| r.single_lasso_spurious.unwrap_or(0) as f64)
            .sum::<f64>()
            / m;
        (Some(single), Some(stats::sign_test(&diffs)))
    } else {
        (None, None)
    };
    Ok(SelectionReport {
        setting: setting.clone(),
        failure_fraction: failures.len() as f64 / setting.replications as f64,
        screening_rate: frac(|r| r.screened),
        below_half_n_rate,
        j0_rate: frac(|r| r.j0_selected),
        mean_spurious,
        mean_single_lasso_spurious: mean_single,
        sign_test: sign,
        records,
        failures,
    })
}
