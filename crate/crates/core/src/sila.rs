//! Split-intersection Lasso selection.
//!
//! The sample is split at random into two halves. On each half a Lasso path
//! is fitted over a shared grid whose endpoints are bracketed by the support
//! sizes `delta1 < |S| < delta2`, the grid point is chosen by a unit-penalty
//! AIC, and the two selected supports are intersected. The column of
//! interest `j0` is forced into the result, either by union after the
//! intersection or by leaving it unpenalized in both halves.

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::data::{Dataset, Submodel};
use crate::error::{Error, Result};
use crate::lasso::{
    aic_select, aic_select_with_penalty, build_bracketed_paths, build_bracketed_paths_for,
    LassoOptions, LassoProblem, DEFAULT_GRID_SIZE,
};
use crate::stream::RandomStream;

/// A support-size bracket, either explicit or derived from the responses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaSpec {
    Auto,
    Value(f64),
}

impl Serialize for DeltaSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            DeltaSpec::Auto => s.serialize_str("auto"),
            DeltaSpec::Value(v) if v.is_infinite() => s.serialize_str("inf"),
            DeltaSpec::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for DeltaSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(DeltaSpec::Value(v)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl std::str::FromStr for DeltaSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "auto" => Ok(DeltaSpec::Auto),
            "inf" | "+inf" | "infinity" => Ok(DeltaSpec::Value(f64::INFINITY)),
            other => other
                .parse::<f64>()
                .ok()
                .filter(|v| *v >= 0.0)
                .map(DeltaSpec::Value)
                .ok_or_else(|| format!("expected a non-negative number or 'auto', got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InclusionMode {
    /// Intersect, then add `j0`.
    #[default]
    UnionJ0,
    /// Leave `j0` unpenalized on both halves and intersect.
    UnpenalizedJ0,
}

impl std::str::FromStr for InclusionMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "union_j0" | "union" => Ok(InclusionMode::UnionJ0),
            "unpenalized_j0" | "unpenalized" => Ok(InclusionMode::UnpenalizedJ0),
            _ => Err(format!("unknown inclusion mode {s:?} (union_j0, unpenalized_j0)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SilaConfig {
    pub delta1: DeltaSpec,
    pub delta2: DeltaSpec,
    pub grid_size: usize,
    pub inclusion_mode: InclusionMode,
    pub split_stream: RandomStream,
    pub lasso: LassoOptions,
}

impl SilaConfig {
    pub fn new(split_stream: RandomStream) -> Self {
        Self {
            delta1: DeltaSpec::Auto,
            delta2: DeltaSpec::Auto,
            grid_size: DEFAULT_GRID_SIZE,
            inclusion_mode: InclusionMode::default(),
            split_stream,
            lasso: LassoOptions::default(),
        }
    }

    /// The `(delta1, delta2)` actually used for responses `y`.
    pub fn resolve_deltas(&self, y: &[f64]) -> (f64, f64) {
        let (a1, a2) = auto_deltas(y);
        let pick = |spec: DeltaSpec, auto: f64| match spec {
            DeltaSpec::Auto => auto,
            DeltaSpec::Value(v) => v,
        };
        (pick(self.delta1, a1), pick(self.delta2, a2))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SilaTrace {
    pub j0: usize,
    pub inclusion_mode: InclusionMode,
    pub deltas: (f64, f64),
    pub half_indices: (Vec<usize>, Vec<usize>),
    /// Shared lambda grid, increasing.
    pub grid: Vec<f64>,
    pub lambda_hats: (f64, f64),
    pub aic_values: (f64, f64),
    pub half_supports: (Vec<usize>, Vec<usize>),
    #[serde(rename = "final")]
    pub final_submodel: Submodel,
    pub selected_labels: Vec<String>,
}

/// Uniformly random partition of `0..n` into sorted halves of sizes
/// `ceil(n/2)` and `floor(n/2)`.
pub fn even_split(n: usize, stream: &RandomStream) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 4 {
        return Err(Error::InvalidArgument(format!(
            "need at least 4 observations to split, got {n}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = stream.rng();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i as u64) as usize;
        idx.swap(i, j);
    }
    let cut = n.div_ceil(2);
    let mut first = idx[..cut].to_vec();
    let mut second = idx[cut..].to_vec();
    first.sort_unstable();
    second.sort_unstable();
    Ok((first, second))
}

/// Default brackets: `(n/12, n/2)` when the responses are balanced
/// (`|sum y - n/2| <= n/10`), otherwise `(min(sum y, n - sum y)/6, n/2)`.
pub fn auto_deltas(y: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let ones: f64 = y.iter().sum();
    let delta2 = n / 2.0;
    if (ones - n / 2.0).abs() <= n / 10.0 {
        (n / 12.0, delta2)
    } else {
        (ones.min(n - ones) / 6.0, delta2)
    }
}

/// `(s1 ∩ s2) ∪ {j0}` for sorted supports.
pub fn combine_supports(s1: &[usize], s2: &[usize], j0: usize) -> Vec<usize> {
    let mut out: Vec<usize> = s1.iter().copied().filter(|j| s2.binary_search(j).is_ok()).collect();
    if let Err(pos) = out.binary_search(&j0) {
        out.insert(pos, j0);
    }
    out
}

pub fn sila_select(dataset: &Dataset, j0: usize, config: &SilaConfig) -> Result<(Submodel, SilaTrace)> {
    let d = dataset.d();
    if j0 >= d {
        return Err(Error::IndexOutOfRange { index: j0, d });
    }
    let (delta1, delta2) = config.resolve_deltas(dataset.y());
    let (i1, i2) = even_split(dataset.n(), &config.split_stream)?;
    let half1 = dataset.subset_rows(&i1)?;
    let half2 = dataset.subset_rows(&i2)?;
    let unpenalized = match config.inclusion_mode {
        InclusionMode::UnionJ0 => None,
        InclusionMode::UnpenalizedJ0 => Some(j0),
    };
    let (path1, path2) = build_bracketed_paths(
        &half1,
        &half2,
        delta1,
        delta2,
        config.grid_size,
        unpenalized,
        &config.lasso,
    )?;
    let c1 = aic_select(&path1, &half1);
    let c2 = aic_select(&path2, &half2);
    let mut s1 = c1.support.clone();
    let mut s2 = c2.support.clone();
    if unpenalized.is_some() {
        // The unpenalized column is part of every fitted half-model.
        for s in [&mut s1, &mut s2] {
            if let Err(pos) = s.binary_search(&j0) {
                s.insert(pos, j0);
            }
        }
    }
    let selected = combine_supports(&s1, &s2, j0);
    let submodel = Submodel::new(selected, Some(j0), d)?;
    let selected_labels = submodel
        .indices()
        .iter()
        .map(|&j| dataset.labels()[j].clone())
        .collect();
    let trace = SilaTrace {
        j0,
        inclusion_mode: config.inclusion_mode,
        deltas: (delta1, delta2),
        half_indices: (i1, i2),
        grid: path1.grid.clone(),
        lambda_hats: (c1.lambda, c2.lambda),
        aic_values: (c1.criterion, c2.criterion),
        half_supports: (s1, s2),
        final_submodel: submodel.clone(),
        selected_labels,
    };
    Ok((submodel, trace))
}

/// One Lasso path on the whole sample over the bracketed grid, tuned by
/// AIC with the given per-variable penalty. Baseline for the split arm.
pub fn single_lasso_select(
    dataset: &Dataset,
    delta1: f64,
    delta2: f64,
    grid_size: usize,
    aic_penalty: f64,
    options: &LassoOptions,
) -> Result<Vec<usize>> {
    let problem = [LassoProblem::new(dataset, None, *options)?];
    let path = build_bracketed_paths_for(&problem, delta1, delta2, grid_size)?
        .pop()
        .expect("one path");
    Ok(aic_select_with_penalty(&path, dataset, aic_penalty).support)
}
