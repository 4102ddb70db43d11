//! SILAB orchestration and normal-theory intervals and tests.
//!
//! `silab_fit` selects a submodel with SILA, bias-corrects the MLE on it by
//! the iterative bootstrap, and reports the coordinate of interest with its
//! plug-in variance `n {Sigma_n(b)^-1}_{jj}` evaluated at the corrected
//! estimate. All reported quantities are conditional on the selected
//! submodel.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bcmle::{ib_fit, IbConfig, IbTrace};
use crate::data::{Dataset, Submodel};
use crate::error::{Error, Result};
use crate::glm::{plugin_variance_from_info, unit_vector, ParameterBox};
use crate::normal;
use crate::sila::{sila_select, SilaConfig, SilaTrace};

/// Significance levels evaluated by default, from 0.01% to 10%.
pub const DEFAULT_ALPHA_GRID: [f64; 7] = [0.0001, 0.0005, 0.001, 0.005, 0.01, 0.05, 0.1];

pub const CONDITIONING_NOTE: &str =
    "estimates, variances, intervals and tests are conditional on the selected submodel";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SilabTrace {
    pub sila: Option<SilaTrace>,
    pub ib: IbTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SilabConfigEcho {
    pub sila: Option<SilaConfig>,
    pub ib: IbConfig,
    pub box_bound: f64,
}

/// The uncorrected MLE on the same submodel, kept for comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MleArm {
    pub beta_j0: f64,
    pub sigma2_j0: f64,
    pub full_beta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SilabResult {
    pub submodel: Submodel,
    pub j0: usize,
    pub j0_label: String,
    /// Position of `j0` within the submodel.
    pub j0_prime: usize,
    pub beta_j0: f64,
    pub sigma2_j0: f64,
    /// Bias-corrected coefficients, in submodel order.
    pub full_beta: Vec<f64>,
    pub n: usize,
    pub mle: MleArm,
    pub trace: SilabTrace,
    pub config: SilabConfigEcho,
    pub conditioning: &'static str,
}

impl SilabResult {
    pub fn sigma_j0(&self) -> f64 {
        self.sigma2_j0.sqrt()
    }
}

/// SILA selection followed by the bias-corrected MLE on the selection.
pub fn silab_fit(
    dataset: &Dataset,
    j0: usize,
    sila_config: &SilaConfig,
    ib_config: &IbConfig,
    bounds: &ParameterBox,
) -> Result<SilabResult> {
    silab_fit_timed(dataset, j0, sila_config, ib_config, bounds).map(|(r, _)| r)
}

/// Wall-clock seconds per stage of [`silab_fit`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub selection_s: f64,
    /// Includes the plug-in variance.
    pub bias_correction_s: f64,
}

pub fn silab_fit_timed(
    dataset: &Dataset,
    j0: usize,
    sila_config: &SilaConfig,
    ib_config: &IbConfig,
    bounds: &ParameterBox,
) -> Result<(SilabResult, StageTimings)> {
    if dataset.n() < 20 {
        return Err(Error::InvalidArgument(format!(
            "need at least 20 observations, got {}",
            dataset.n()
        )));
    }
    let t0 = Instant::now();
    let (submodel, sila_trace) =
        sila_select(dataset, j0, sila_config).map_err(|e| e.at_stage("selection"))?;
    let selection_s = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let mut result = silab_fit_on_submodel(dataset, &submodel, j0, ib_config, bounds)?;
    let timings = StageTimings {
        selection_s,
        bias_correction_s: t1.elapsed().as_secs_f64(),
    };
    result.trace.sila = Some(sila_trace);
    result.config.sila = Some(sila_config.clone());
    Ok((result, timings))
}

/// The bias-corrected MLE and its inference on a given submodel.
pub fn silab_fit_on_submodel(
    dataset: &Dataset,
    submodel: &Submodel,
    j0: usize,
    ib_config: &IbConfig,
    bounds: &ParameterBox,
) -> Result<SilabResult> {
    let j0_prime = submodel
        .position(j0)
        .ok_or_else(|| Error::InvalidSubmodel(format!("column {j0} is not in the submodel")))?;
    let n = dataset.n();
    if submodel.len() >= n {
        return Err(Error::InvalidSubmodel(format!(
            "submodel has {} columns but only {n} observations",
            submodel.len()
        ))
        .at_stage("bias_correction"));
    }
    let fit = ib_fit(dataset, submodel, ib_config, bounds).map_err(|e| e.at_stage("bias_correction"))?;
    let u = unit_vector(submodel.len(), j0_prime);
    let sigma2 = plugin_variance_from_info(&fit.info, &u, n).map_err(|e| e.at_stage("variance"))?;
    let mle_sigma2 =
        plugin_variance_from_info(&fit.initial.info, &u, n).map_err(|e| e.at_stage("variance"))?;
    Ok(SilabResult {
        submodel: submodel.clone(),
        j0,
        j0_label: dataset.labels()[j0].clone(),
        j0_prime,
        beta_j0: fit.beta[j0_prime],
        sigma2_j0: sigma2,
        full_beta: fit.beta.clone(),
        n,
        mle: MleArm {
            beta_j0: fit.initial.beta[j0_prime],
            sigma2_j0: mle_sigma2,
            full_beta: fit.initial.beta.clone(),
        },
        trace: SilabTrace {
            sila: None,
            ib: fit.trace,
        },
        config: SilabConfigEcho {
            sila: None,
            ib: ib_config.clone(),
            box_bound: bounds.bound(),
        },
        conditioning: CONDITIONING_NOTE,
    })
}

/// Interval shape: `Upper` is unbounded below, `Lower` unbounded above.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    TwoSided,
    Lower,
    Upper,
}

impl std::str::FromStr for Side {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "two_sided" | "two" | "both" => Ok(Side::TwoSided),
            "lower" => Ok(Side::Lower),
            "upper" => Ok(Side::Upper),
            _ => Err(format!("unknown interval side {s:?} (two_sided, lower, upper)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    Greater,
    Less,
    TwoSided,
}

impl Alternative {
    /// The interval whose exclusion of the null value is the rejection event.
    pub fn matching_side(self) -> Side {
        match self {
            Alternative::Greater => Side::Lower,
            Alternative::Less => Side::Upper,
            Alternative::TwoSided => Side::TwoSided,
        }
    }
}

impl std::str::FromStr for Alternative {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "greater" => Ok(Alternative::Greater),
            "less" => Ok(Alternative::Less),
            "two_sided" => Ok(Alternative::TwoSided),
            _ => Err(format!("unknown alternative {s:?} (greater, less, two_sided)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalResult {
    pub level: f64,
    pub side: Side,
    #[serde(with = "extended_pair")]
    pub bounds: (f64, f64),
    pub center: f64,
    /// Distance from the center to each finite bound.
    pub half_width: f64,
}

impl IntervalResult {
    pub fn contains(&self, v: f64) -> bool {
        self.bounds.0 <= v && v <= self.bounds.1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub null_value: f64,
    pub alternative: Alternative,
    pub z_stat: f64,
    pub p_value: f64,
    /// Decision per significance level, keyed by the level as written.
    pub reject_at: BTreeMap<String, bool>,
}

pub fn level_key(alpha: f64) -> String {
    format!("{alpha}")
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

/// Level `1 - alpha` interval for the coordinate of interest.
pub fn confidence_interval(result: &SilabResult, n: usize, alpha: f64, side: Side) -> Result<IntervalResult> {
    interval(result.beta_j0, result.sigma_j0(), n, alpha, side)
}

/// Level `1 - alpha` normal interval around `center` with standard error `sigma / sqrt(n)`.
pub fn interval(center: f64, sigma: f64, n: usize, alpha: f64, side: Side) -> Result<IntervalResult> {
    check_alpha(alpha)?;
    let se = sigma / (n as f64).sqrt();
    let (q, bounds) = match side {
        Side::TwoSided => {
            let q = normal::quantile(1.0 - alpha / 2.0);
            (q, (center - q * se, center + q * se))
        }
        Side::Lower => {
            let q = normal::quantile(1.0 - alpha);
            (q, (center - q * se, f64::INFINITY))
        }
        Side::Upper => {
            let q = normal::quantile(1.0 - alpha);
            (q, (f64::NEG_INFINITY, center + q * se))
        }
    };
    Ok(IntervalResult {
        level: 1.0 - alpha,
        side,
        bounds,
        center,
        half_width: q * se,
    })
}

/// z-test of `beta_j0 = null_value`, decided at every level of the default grid.
pub fn hypothesis_test(result: &SilabResult, n: usize, null_value: f64, alternative: Alternative) -> TestResult {
    z_test(result.beta_j0, result.sigma_j0(), n, null_value, alternative, &DEFAULT_ALPHA_GRID)
}

pub fn hypothesis_test_at(
    result: &SilabResult,
    n: usize,
    null_value: f64,
    alternative: Alternative,
    levels: &[f64],
) -> TestResult {
    z_test(result.beta_j0, result.sigma_j0(), n, null_value, alternative, levels)
}

/// `z = sqrt(n) (estimate - null_value) / sigma`; rejects at `alpha` when `p < alpha`.
pub fn z_test(
    estimate: f64,
    sigma: f64,
    n: usize,
    null_value: f64,
    alternative: Alternative,
    levels: &[f64],
) -> TestResult {
    let z = (n as f64).sqrt() * (estimate - null_value) / sigma;
    let p = p_value(z, alternative);
    TestResult {
        null_value,
        alternative,
        z_stat: z,
        p_value: p,
        reject_at: levels.iter().map(|&a| (level_key(a), p < a)).collect(),
    }
}

pub fn p_value(z: f64, alternative: Alternative) -> f64 {
    match alternative {
        Alternative::Greater => normal::upper_tail(z),
        Alternative::Less => normal::cdf(z),
        Alternative::TwoSided => (2.0 * normal::upper_tail(z.abs())).min(1.0),
    }
}

/// Serializes infinite bounds as `"inf"` / `"-inf"`.
mod extended_pair {
    use super::*;

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Ext {
        Num(f64),
        Text(String),
    }

    fn to_ext(v: f64) -> Ext {
        if v == f64::INFINITY {
            Ext::Text("inf".into())
        } else if v == f64::NEG_INFINITY {
            Ext::Text("-inf".into())
        } else {
            Ext::Num(v)
        }
    }

    fn from_ext<E: serde::de::Error>(e: Ext) -> std::result::Result<f64, E> {
        match e {
            Ext::Num(v) => Ok(v),
            Ext::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Ext::Text(t) if t == "-inf" => Ok(f64::NEG_INFINITY),
            Ext::Text(t) => Err(E::custom(format!("invalid bound {t:?}"))),
        }
    }

    pub fn serialize<S: Serializer>(v: &(f64, f64), s: S) -> std::result::Result<S::Ok, S::Error> {
        (to_ext(v.0), to_ext(v.1)).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<(f64, f64), D::Error> {
        let (a, b) = <(Ext, Ext)>::deserialize(d)?;
        Ok((from_ext(a)?, from_ext(b)?))
    }
}
