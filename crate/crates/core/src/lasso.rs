//! L1-penalized logistic regression.
//!
//! The objective is on the deviance scale, `-2 loglik(b) + lambda * sum_j w_j |b_j|`,
//! with no `1/n` normalization. When standardization is on, the penalty
//! weight `w_j` is the sample standard deviation of column `j`, which is the
//! same as penalizing coefficients of unit-variance columns while reporting
//! them on the original scale. Columns are not centered (there is no
//! intercept to absorb the mean).
//!
//! Each fit is a proximal-Newton loop: an IRLS quadratic model of the
//! deviance is minimized by cyclic coordinate descent with soft
//! thresholding, and the resulting direction is accepted with a backtracking
//! line search on the exact objective, so the objective never increases.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::glm::{column, dot, linear_predictor, log_likelihood_eta, mean};

pub const DEFAULT_TOL: f64 = 1e-7;
pub const DEFAULT_KKT_TOL: f64 = 1e-5;
pub const DEFAULT_MAX_SWEEPS: usize = 10_000;
pub const DEFAULT_GRID_SIZE: usize = 50;
/// Lower end of a path relative to its upper end when `delta2` does not bind.
pub const DEFAULT_MIN_RATIO: f64 = 1e-3;
const MAX_BRACKET_STEPS: usize = 60;
const BRACKET_PRECISION: f64 = 1e-3;
const WEIGHT_FLOOR: f64 = 1e-5;
const MAX_OUTER: usize = 500;
const HOMOTOPY_FACTOR: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LassoOptions {
    /// Threshold on the largest standardized coefficient change.
    pub tol: f64,
    pub kkt_tol: f64,
    /// Coordinate-descent sweeps allowed per fit.
    pub max_sweeps: usize,
    pub standardize: bool,
}

impl Default for LassoOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            kkt_tol: DEFAULT_KKT_TOL,
            max_sweeps: DEFAULT_MAX_SWEEPS,
            standardize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoFit {
    pub lambda: f64,
    pub beta: Vec<f64>,
    pub support: Vec<usize>,
    /// `-2 loglik(beta)`.
    pub deviance: f64,
    pub penalized_objective: f64,
    /// Largest KKT residual, in standardized units.
    pub kkt_violation: f64,
    pub converged: bool,
    pub sweeps: usize,
}

impl LassoFit {
    pub fn support_size(&self) -> usize {
        self.support.len()
    }
}

/// A solved regularization path; `grid` is strictly increasing and
/// `fits[k]` is the solution at `grid[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoPath {
    pub grid: Vec<f64>,
    pub fits: Vec<LassoFit>,
    pub unpenalized: Option<usize>,
    /// Adjacent pairs (large to small lambda) where the support shrank.
    pub monotonicity_violations: usize,
}

/// A logistic Lasso problem with its penalty weights resolved.
#[derive(Debug, Clone)]
pub struct LassoProblem<'a> {
    x: &'a DMatrix<f64>,
    y: &'a [f64],
    /// Penalty weight per column; zero for the unpenalized column.
    weights: Vec<f64>,
    /// Scale used to measure coefficient changes.
    scales: Vec<f64>,
    eligible: Vec<bool>,
    unpenalized: Option<usize>,
    options: LassoOptions,
    /// Solution with every penalized coefficient at zero, and lambda_max.
    null: OnceLock<(Vec<f64>, f64)>,
}

impl<'a> LassoProblem<'a> {
    pub fn new(
        dataset: &'a Dataset,
        unpenalized: Option<usize>,
        options: LassoOptions,
    ) -> Result<Self> {
        let d = dataset.d();
        if let Some(j) = unpenalized.filter(|&j| j >= d) {
            return Err(Error::IndexOutOfRange { index: j, d });
        }
        let n = dataset.n() as f64;
        let mut weights = vec![0.0; d];
        let mut scales = vec![1.0; d];
        let mut eligible = vec![true; d];
        for j in 0..d {
            let col = dataset.column(j);
            let m = col.iter().sum::<f64>() / n;
            let ss: f64 = col.iter().map(|v| (v - m) * (v - m)).sum();
            let sd = (ss / (n - 1.0)).sqrt();
            let degenerate = !(sd > 1e-12 * m.abs().max(1.0));
            if Some(j) == unpenalized {
                scales[j] = if degenerate { m.abs().max(1.0) } else { sd };
                continue;
            }
            if degenerate {
                eligible[j] = false;
                log::warn!(
                    "column {:?} has zero variance and is excluded from selection",
                    dataset.labels()[j]
                );
                continue;
            }
            if options.standardize {
                weights[j] = sd;
                scales[j] = sd;
            } else {
                weights[j] = 1.0;
            }
        }
        Ok(Self {
            x: dataset.x(),
            y: dataset.y(),
            weights,
            scales,
            eligible,
            unpenalized,
            options,
            null: OnceLock::new(),
        })
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn options(&self) -> &LassoOptions {
        &self.options
    }

    /// Number of columns that can enter a support.
    pub fn eligible_count(&self) -> usize {
        self.eligible.iter().filter(|&&e| e).count()
    }

    pub fn objective(&self, beta: &[f64], lambda: f64) -> f64 {
        let eta = linear_predictor(self.x, beta);
        self.objective_eta(beta, &eta, lambda)
    }

    fn objective_eta(&self, beta: &[f64], eta: &[f64], lambda: f64) -> f64 {
        let pen = self.penalty(beta);
        let pen = if pen == 0.0 { 0.0 } else { lambda * pen };
        -2.0 * log_likelihood_eta(self.y, eta) + pen
    }

    fn penalty(&self, beta: &[f64]) -> f64 {
        beta.iter()
            .zip(&self.weights)
            .map(|(b, w)| w * b.abs())
            .sum()
    }

    /// Gradient of `-2 loglik`.
    pub fn deviance_gradient(&self, beta: &[f64]) -> Vec<f64> {
        let eta = linear_predictor(self.x, beta);
        self.gradient_eta(&eta)
    }

    fn gradient_eta(&self, eta: &[f64]) -> Vec<f64> {
        let resid: Vec<f64> = self
            .y
            .iter()
            .zip(eta)
            .map(|(&y, &e)| -2.0 * (y - mean(e)))
            .collect();
        (0..self.d()).map(|j| dot(column(self.x, j), &resid)).collect()
    }

    /// Largest KKT residual at `beta`, in standardized units.
    pub fn kkt_violation(&self, beta: &[f64], lambda: f64) -> f64 {
        let eta = linear_predictor(self.x, beta);
        self.kkt_eta(beta, &eta, lambda)
    }

    fn kkt_eta(&self, beta: &[f64], eta: &[f64], lambda: f64) -> f64 {
        let grad = self.gradient_eta(eta);
        let mut worst = 0.0f64;
        for j in 0..self.d() {
            if !self.eligible[j] {
                continue;
            }
            let r = if Some(j) == self.unpenalized {
                grad[j].abs() / self.scales[j]
            } else {
                let w = self.weights[j];
                if beta[j] != 0.0 {
                    (grad[j] + lambda * w * beta[j].signum()).abs() / w
                } else {
                    (grad[j].abs() / w - lambda).max(0.0)
                }
            };
            worst = worst.max(r);
        }
        worst
    }

    /// Smallest lambda at which every penalized coefficient is zero.
    pub fn lambda_max(&self) -> f64 {
        self.null_solution().1
    }

    fn null_solution(&self) -> &(Vec<f64>, f64) {
        self.null.get_or_init(|| {
            let base = match self.unpenalized {
                Some(_) => self.solve(f64::INFINITY, None).beta,
                None => vec![0.0; self.d()],
            };
            let grad = self.deviance_gradient(&base);
            let lmax = (0..self.d())
                .filter(|&j| self.eligible[j] && Some(j) != self.unpenalized)
                .map(|j| grad[j].abs() / self.weights[j])
                .fold(0.0, f64::max);
            (base, lmax)
        })
    }

    /// Solves the problem at `lambda`, warm-started from `init`. At or
    /// above `lambda_max` the null solution is returned exactly. Without a
    /// warm start the solution is tracked down from `lambda_max` along a
    /// geometric sequence.
    pub fn fit(&self, lambda: f64, init: Option<&[f64]>) -> LassoFit {
        let (base, lmax) = self.null_solution();
        if lambda < *lmax {
            if let Some(b) = init {
                return self.solve(lambda, Some(b));
            }
            let mut warm = base.clone();
            let mut sweeps = 0;
            let mut step = lmax * HOMOTOPY_FACTOR;
            while step > lambda {
                let f = self.solve(step, Some(&warm));
                sweeps += f.sweeps;
                warm = f.beta;
                step *= HOMOTOPY_FACTOR;
            }
            let mut fit = self.solve(lambda, Some(&warm));
            fit.sweeps += sweeps;
            return fit;
        }
        let eta = linear_predictor(self.x, base);
        LassoFit {
            lambda,
            beta: base.clone(),
            support: self.unpenalized.filter(|&j| base[j] != 0.0).into_iter().collect(),
            deviance: -2.0 * log_likelihood_eta(self.y, &eta),
            penalized_objective: self.objective_eta(base, &eta, lambda),
            kkt_violation: self.kkt_eta(base, &eta, lambda),
            converged: true,
            sweeps: 0,
        }
    }

    fn solve(&self, lambda: f64, init: Option<&[f64]>) -> LassoFit {
        let (n, d) = (self.x.nrows(), self.d());
        let inner_tol = self.options.tol;
        let mut beta: Vec<f64> = match init {
            Some(b) => b.to_vec(),
            None => vec![0.0; d],
        };
        for j in 0..d {
            if !self.eligible[j] {
                beta[j] = 0.0;
            }
        }
        let threshold: Vec<f64> = self.weights.iter().map(|w| 0.5 * lambda * w).collect();
        let mut eta = linear_predictor(self.x, &beta);
        let mut obj = self.objective_eta(&beta, &eta, lambda);
        let mut sweeps = 0;
        let mut converged = false;

        let mut w = vec![0.0; n];
        let mut z = vec![0.0; n];
        let mut res = vec![0.0; n];
        let mut wx = vec![0.0; n];
        let mut curv = vec![0.0; d];

        for _ in 0..MAX_OUTER {
            for i in 0..n {
                let m = mean(eta[i]);
                w[i] = (m * (1.0 - m)).max(WEIGHT_FLOOR);
                z[i] = (self.y[i] - m) / w[i];
            }
            for j in 0..d {
                if self.eligible[j] {
                    for ((o, &wi), &v) in wx.iter_mut().zip(&w).zip(column(self.x, j)) {
                        *o = wi * v;
                    }
                    curv[j] = dot(&wx, column(self.x, j));
                }
            }

            // Coordinate descent on the quadratic model, res = eta + z - X nb.
            let mut nb = beta.clone();
            res.copy_from_slice(&z);
            let mut full = true;
            loop {
                let mut max_change = 0.0f64;
                for j in 0..d {
                    if !self.eligible[j] || curv[j] <= 0.0 {
                        continue;
                    }
                    let free = Some(j) == self.unpenalized;
                    if !full && nb[j] == 0.0 && !free {
                        continue;
                    }
                    let xj = column(self.x, j);
                    let mut c = 0.0;
                    for ((&wi, &ri), &v) in w.iter().zip(&res).zip(xj) {
                        c += wi * ri * v;
                    }
                    c += curv[j] * nb[j];
                    let updated = if free {
                        c / curv[j]
                    } else {
                        soft_threshold(c, threshold[j]) / curv[j]
                    };
                    let delta = updated - nb[j];
                    if delta != 0.0 {
                        for (r, &v) in res.iter_mut().zip(xj) {
                            *r -= delta * v;
                        }
                        nb[j] = updated;
                        max_change = max_change.max(delta.abs() * self.scales[j]);
                    }
                }
                sweeps += 1;
                if sweeps >= self.options.max_sweeps {
                    break;
                }
                if max_change < inner_tol {
                    if full {
                        break;
                    }
                    full = true;
                } else {
                    full = false;
                }
            }

            // Backtracking on the exact objective along nb - beta.
            let d_eta: Vec<f64> = z.iter().zip(&res).map(|(zi, ri)| zi - ri).collect();
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..40 {
                let cand: Vec<f64> = if t == 1.0 {
                    nb.clone()
                } else {
                    beta.iter().zip(&nb).map(|(b, c)| b + t * (c - b)).collect()
                };
                let cand_eta: Vec<f64> = eta.iter().zip(&d_eta).map(|(e, de)| e + t * de).collect();
                let cand_obj = self.objective_eta(&cand, &cand_eta, lambda);
                if cand_obj <= obj + 1e-13 * obj.abs().max(1.0) {
                    accepted = Some((cand, cand_obj));
                    break;
                }
                t *= 0.5;
            }
            let Some((cand, _)) = accepted else {
                break;
            };
            let change = cand
                .iter()
                .zip(&beta)
                .zip(&self.scales)
                .map(|((c, b), s)| (c - b).abs() * s)
                .fold(0.0, f64::max);
            beta = cand;
            eta = linear_predictor(self.x, &beta);
            obj = self.objective_eta(&beta, &eta, lambda);
            if change < self.options.tol && self.kkt_eta(&beta, &eta, lambda) <= self.options.kkt_tol {
                converged = true;
                break;
            }
            if sweeps >= self.options.max_sweeps {
                break;
            }
        }

        let kkt = self.kkt_eta(&beta, &eta, lambda);
        converged = converged || kkt <= self.options.kkt_tol;
        let support = (0..d).filter(|&j| beta[j] != 0.0).collect();
        LassoFit {
            lambda,
            deviance: -2.0 * log_likelihood_eta(self.y, &eta),
            penalized_objective: obj,
            beta,
            support,
            kkt_violation: kkt,
            converged,
            sweeps,
        }
    }

    /// Fits every grid point, warm-starting from larger to smaller lambda.
    pub fn fit_path(&self, grid: &[f64], init: Option<&[f64]>) -> LassoPath {
        let mut fits: Vec<LassoFit> = Vec::with_capacity(grid.len());
        let mut warm: Option<Vec<f64>> = init.map(|b| b.to_vec());
        for &lambda in grid.iter().rev() {
            let fit = self.fit(lambda, warm.as_deref());
            if !fit.converged {
                log::warn!(
                    "lasso fit at lambda = {lambda:.6e} did not converge (kkt = {:.3e})",
                    fit.kkt_violation
                );
            }
            warm = Some(fit.beta.clone());
            fits.push(fit);
        }
        fits.reverse();
        let monotonicity_violations = fits
            .windows(2)
            .filter(|w| w[0].support_size() < w[1].support_size())
            .count();
        if monotonicity_violations > 0 {
            log::debug!("support sizes not nested at {monotonicity_violations} adjacent grid pairs");
        }
        LassoPath {
            grid: grid.to_vec(),
            fits,
            unpenalized: self.unpenalized,
            monotonicity_violations,
        }
    }
}

#[inline]
pub fn soft_threshold(c: f64, t: f64) -> f64 {
    if c > t {
        c - t
    } else if c < -t {
        c + t
    } else {
        0.0
    }
}

/// Single Lasso fit on all columns of `dataset`.
pub fn lasso_fit(
    dataset: &Dataset,
    lambda: f64,
    init: Option<&[f64]>,
    unpenalized: Option<usize>,
    options: &LassoOptions,
) -> Result<LassoFit> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be non-negative, got {lambda}"
        )));
    }
    let problem = LassoProblem::new(dataset, unpenalized, *options)?;
    if let Some(b) = init {
        if b.len() != dataset.d() {
            return Err(Error::DimensionMismatch(format!(
                "warm start has length {}, d = {}",
                b.len(),
                dataset.d()
            )));
        }
    }
    Ok(problem.fit(lambda, init))
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| {
            if k == 0 {
                lo
            } else if k == n - 1 {
                hi
            } else {
                (a + (b - a) * k as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Warm-start cache of support sizes per problem along lambda.
struct BracketSearch<'p, 'a> {
    problems: &'p [LassoProblem<'a>],
    /// Per problem: (lambda, beta), kept sorted by decreasing lambda.
    cache: Vec<Vec<(f64, Vec<f64>)>>,
}

impl<'p, 'a> BracketSearch<'p, 'a> {
    fn supports(&mut self, lambda: f64) -> Vec<usize> {
        let problems = self.problems;
        let cache = &mut self.cache;
        problems
            .par_iter()
            .zip(cache.par_iter_mut())
            .map(|(prob, entries)| {
                // warm start from the closest lambda above
                let warm = entries
                    .iter()
                    .filter(|(l, _)| *l >= lambda)
                    .min_by(|a, b| a.0.total_cmp(&b.0))
                    .map(|(_, b)| b.clone());
                let fit = prob.fit(lambda, warm.as_deref());
                let size = fit.support_size();
                entries.push((lambda, fit.beta));
                size
            })
            .collect()
    }
}

/// Builds one shared log-spaced grid `lambda_1 < ... < lambda_K` such that
/// at `lambda_K` every problem's support exceeds `delta1` and at `lambda_1`
/// every support stays below `delta2`, then fits each problem along it.
pub fn build_bracketed_paths_for(
    problems: &[LassoProblem<'_>],
    delta1: f64,
    delta2: f64,
    grid_size: usize,
) -> Result<Vec<LassoPath>> {
    if !(delta1 >= 0.0 && delta2 > delta1) {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= delta1 < delta2, got ({delta1}, {delta2})"
        )));
    }
    if grid_size < 2 {
        return Err(Error::InvalidArgument("grid size must be at least 2".into()));
    }
    let max_support = problems
        .iter()
        .map(|p| p.eligible_count())
        .min()
        .unwrap_or(0);
    if delta1 >= max_support as f64 {
        return Err(Error::BracketingInfeasible(format!(
            "delta1 = {delta1} but at most {max_support} columns can be active"
        )));
    }

    let mut search = BracketSearch {
        problems,
        cache: vec![Vec::new(); problems.len()],
    };
    let above_lower = |s: &[usize]| s.iter().all(|&k| (k as f64) > delta1);
    let below_upper = |s: &[usize]| s.iter().all(|&k| (k as f64) < delta2);

    let lambda_max = problems
        .iter()
        .map(|p| p.lambda_max())
        .fold(f64::INFINITY, f64::min);
    if !(lambda_max.is_finite() && lambda_max > 0.0) {
        return Err(Error::BracketingInfeasible(
            "no penalized column carries signal (lambda_max = 0)".into(),
        ));
    }

    // Upper end: largest lambda whose supports all exceed delta1.
    let upper = if above_lower(&search.supports(lambda_max)) {
        lambda_max
    } else {
        let mut fail = lambda_max;
        let mut ok = None;
        for _ in 0..MAX_BRACKET_STEPS {
            let lam = fail * 0.5;
            if above_lower(&search.supports(lam)) {
                ok = Some(lam);
                break;
            }
            fail = lam;
        }
        let Some(mut ok) = ok else {
            return Err(Error::BracketingInfeasible(format!(
                "no lambda above {fail:.3e} gives supports larger than delta1 = {delta1}"
            )));
        };
        for _ in 0..MAX_BRACKET_STEPS {
            if fail / ok <= 1.0 + BRACKET_PRECISION {
                break;
            }
            let mid = (ok * fail).sqrt();
            if above_lower(&search.supports(mid)) {
                ok = mid;
            } else {
                fail = mid;
            }
        }
        ok
    };
    if !below_upper(&search.supports(upper)) {
        return Err(Error::BracketingInfeasible(format!(
            "supports at the largest admissible lambda already reach delta2 = {delta2}"
        )));
    }

    // Lower end: as small as the default ratio allows, subject to delta2.
    // The candidate path is fitted downwards from the upper end and kept
    // unless some support reaches delta2 along it.
    let warm_at = |entries: &Vec<(f64, Vec<f64>)>, lam: f64| {
        entries
            .iter()
            .filter(|(l, _)| *l >= lam)
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, b)| b.clone())
    };
    let fit_paths = |grid: &[f64], cache: &[Vec<(f64, Vec<f64>)>]| -> Vec<LassoPath> {
        problems
            .par_iter()
            .zip(cache.par_iter())
            .map(|(prob, entries)| prob.fit_path(grid, warm_at(entries, upper).as_deref()))
            .collect()
    };
    let floor = upper * DEFAULT_MIN_RATIO;
    let candidate = fit_paths(&log_grid(floor, upper, grid_size), &search.cache);
    let first_breach = (0..grid_size)
        .rev()
        .find(|&k| !below_upper(&candidate.iter().map(|p| p.fits[k].support_size()).collect::<Vec<_>>()));
    let paths = match first_breach {
        None => candidate,
        Some(k) => {
            // Bisect between the breaching grid point and the one above it.
            for (entries, path) in search.cache.iter_mut().zip(&candidate) {
                for f in &path.fits[k..] {
                    entries.push((f.lambda, f.beta.clone()));
                }
            }
            let mut fail = candidate[0].grid[k];
            let mut ok = candidate[0].grid[(k + 1).min(grid_size - 1)];
            for _ in 0..MAX_BRACKET_STEPS {
                if ok / fail <= 1.0 + BRACKET_PRECISION {
                    break;
                }
                let mid = (ok * fail).sqrt();
                if below_upper(&search.supports(mid)) {
                    ok = mid;
                } else {
                    fail = mid;
                }
            }
            if ok >= upper * (1.0 - 1e-12) {
                return Err(Error::BracketingInfeasible(format!(
                    "admissible lambda range collapsed at {upper:.3e}"
                )));
            }
            fit_paths(&log_grid(ok, upper, grid_size), &search.cache)
        }
    };

    let top: Vec<usize> = paths.iter().map(|p| p.fits[grid_size - 1].support_size()).collect();
    let bottom: Vec<usize> = paths.iter().map(|p| p.fits[0].support_size()).collect();
    if !above_lower(&top) || !below_upper(&bottom) {
        return Err(Error::BracketingInfeasible(format!(
            "endpoint supports {top:?} / {bottom:?} violate ({delta1}, {delta2}) after refit"
        )));
    }
    Ok(paths)
}

/// Bracketed paths for the two halves of a split sample.
pub fn build_bracketed_paths(
    half1: &Dataset,
    half2: &Dataset,
    delta1: f64,
    delta2: f64,
    grid_size: usize,
    unpenalized: Option<usize>,
    options: &LassoOptions,
) -> Result<(LassoPath, LassoPath)> {
    let problems = [
        LassoProblem::new(half1, unpenalized, *options)?,
        LassoProblem::new(half2, unpenalized, *options)?,
    ];
    let mut paths = build_bracketed_paths_for(&problems, delta1, delta2, grid_size)?;
    let second = paths.pop().expect("two paths");
    let first = paths.pop().expect("two paths");
    Ok((first, second))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AicChoice {
    pub index: usize,
    pub lambda: f64,
    pub criterion: f64,
    pub support: Vec<usize>,
}

/// Unit-penalty AIC `-2 loglik + ||b||_0`.
pub fn aic_select(path: &LassoPath, dataset: &Dataset) -> AicChoice {
    aic_select_with_penalty(path, dataset, 1.0)
}

/// `-2 loglik + penalty * ||b||_0` minimized over the path; ties go to the
/// smaller support, then the larger lambda. A forced unpenalized coordinate
/// counts towards `||b||_0`.
pub fn aic_select_with_penalty(path: &LassoPath, dataset: &Dataset, penalty: f64) -> AicChoice {
    assert!(!path.fits.is_empty(), "empty path");
    let mut best: Option<(usize, f64)> = None;
    for (k, fit) in path.fits.iter().enumerate() {
        let eta = linear_predictor(dataset.x(), &fit.beta);
        let crit = -2.0 * log_likelihood_eta(dataset.y(), &eta) + penalty * fit.support_size() as f64;
        let better = match best {
            None => true,
            Some((b, bc)) => {
                let tie = (crit - bc).abs() <= 1e-12 * bc.abs().max(1.0);
                if tie {
                    let (s, bs) = (fit.support_size(), path.fits[b].support_size());
                    s < bs || (s == bs && path.grid[k] > path.grid[b])
                } else {
                    crit < bc
                }
            }
        };
        if better {
            best = Some((k, crit));
        }
    }
    let (index, criterion) = best.expect("non-empty path");
    AicChoice {
        index,
        lambda: path.grid[index],
        criterion,
        support: path.fits[index].support.clone(),
    }
}
