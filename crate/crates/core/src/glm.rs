//! Logistic-model primitives: mean function, log-likelihood, score,
//! Fisher information `X^T W X`, a safeguarded Newton MLE and the plug-in
//! variance `n u^T I^{-1} u`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

pub const DEFAULT_BOX_BOUND: f64 = 15.0;
pub const DEFAULT_SCORE_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 100;

/// Largest Newton step (max-abs) still compatible with convergence. Under
/// separation the score decays geometrically but the Newton step does not.
const STEP_TOL: f64 = 1e-4;
const SATURATED_ETA: f64 = 30.0;
const SATURATED_GAP: f64 = 1e-8;

/// The logistic function, evaluated without exponentiating a large
/// positive argument.
#[inline]
pub fn mean(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(eta))`.
#[inline]
pub fn log1pexp(eta: f64) -> f64 {
    eta.max(0.0) + (-eta.abs()).exp().ln_1p()
}

/// `log var(Y | eta) = log g(eta){1 - g(eta)}`, finite for any finite eta.
#[inline]
pub fn log_variance(eta: f64) -> f64 {
    -eta.abs() - 2.0 * (-eta.abs()).exp().ln_1p()
}

/// Four-accumulator dot product; the fixed summation order keeps results
/// reproducible while letting the compiler vectorize.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub(crate) fn column(x: &DMatrix<f64>, j: usize) -> &[f64] {
    let n = x.nrows();
    &x.as_slice()[j * n..(j + 1) * n]
}

pub(crate) fn linear_predictor(x: &DMatrix<f64>, beta: &[f64]) -> Vec<f64> {
    let mut eta = vec![0.0; x.nrows()];
    for (j, &b) in beta.iter().enumerate() {
        if b != 0.0 {
            for (e, &v) in eta.iter_mut().zip(column(x, j)) {
                *e += b * v;
            }
        }
    }
    eta
}

pub(crate) fn log_likelihood_eta(y: &[f64], eta: &[f64]) -> f64 {
    y.iter()
        .zip(eta)
        .map(|(&yi, &e)| yi * e - log1pexp(e))
        .sum()
}

fn check_len(x: &DMatrix<f64>, beta: &[f64]) {
    assert_eq!(
        beta.len(),
        x.ncols(),
        "coefficient vector length must equal the number of columns"
    );
}

/// `sum_i y_i log g(x_i'b) + (1 - y_i) log(1 - g(x_i'b))`.
pub fn log_likelihood(dataset: &Dataset, beta: &[f64]) -> f64 {
    check_len(dataset.x(), beta);
    log_likelihood_eta(dataset.y(), &linear_predictor(dataset.x(), beta))
}

pub(crate) fn score_eta(x: &DMatrix<f64>, y: &[f64], eta: &[f64]) -> Vec<f64> {
    let resid: Vec<f64> = y.iter().zip(eta).map(|(&yi, &e)| yi - mean(e)).collect();
    (0..x.ncols()).map(|j| dot(column(x, j), &resid)).collect()
}

/// Gradient of the log-likelihood, `sum_i (y_i - g(x_i'b)) x_i`.
pub fn score(dataset: &Dataset, beta: &[f64]) -> Vec<f64> {
    check_len(dataset.x(), beta);
    score_eta(
        dataset.x(),
        dataset.y(),
        &linear_predictor(dataset.x(), beta),
    )
}

/// `X^T W X` with `W_ii = g(eta_i)(1 - g(eta_i))`; exactly symmetric.
pub(crate) fn info_eta(x: &DMatrix<f64>, eta: &[f64]) -> DMatrix<f64> {
    let w: Vec<f64> = eta
        .iter()
        .map(|&e| {
            let m = mean(e);
            m * (1.0 - m)
        })
        .collect();
    weighted_gram(x, &w)
}

pub(crate) fn weighted_gram(x: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let p = x.ncols();
    let mut info = DMatrix::zeros(p, p);
    let mut wx = vec![0.0; x.nrows()];
    for j in 0..p {
        for ((o, &wi), &v) in wx.iter_mut().zip(w).zip(column(x, j)) {
            *o = wi * v;
        }
        for k in j..p {
            let v = dot(&wx, column(x, k));
            info[(j, k)] = v;
            info[(k, j)] = v;
        }
    }
    info
}

/// Fisher information `Sigma_n(beta)`.
pub fn fisher_info(dataset: &Dataset, beta: &[f64]) -> DMatrix<f64> {
    check_len(dataset.x(), beta);
    info_eta(dataset.x(), &linear_predictor(dataset.x(), beta))
}

/// Cholesky factor of a symmetric matrix, retrying with a diagonal ridge of
/// `1e-10 * trace / p`, escalated tenfold up to `1e-4 * trace / p`.
pub fn cholesky_with_ridge(a: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if let Some(c) = Cholesky::new(a.clone()) {
        return Ok(c);
    }
    let p = a.nrows().max(1) as f64;
    let scale = a.trace() / p;
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::SingularInformation);
    }
    let mut factor = 1e-10;
    while factor <= 1e-4 * (1.0 + 1e-9) {
        let mut ridged = a.clone();
        for i in 0..a.nrows() {
            ridged[(i, i)] += factor * scale;
        }
        if let Some(c) = Cholesky::new(ridged) {
            return Ok(c);
        }
        factor *= 10.0;
    }
    Err(Error::SingularInformation)
}

/// The compact coefficient space `[-B, B]^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterBox {
    bound: f64,
}

impl ParameterBox {
    pub fn new(bound: f64) -> Result<Self> {
        if !(bound.is_finite() && bound > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "box bound must be finite and positive, got {bound}"
            )));
        }
        Ok(Self { bound })
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(-self.bound, self.bound)
    }

    pub fn contains(&self, beta: &[f64]) -> bool {
        beta.iter().all(|b| b.abs() <= self.bound)
    }
}

impl Default for ParameterBox {
    fn default() -> Self {
        Self {
            bound: DEFAULT_BOX_BOUND,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleOptions {
    /// Convergence threshold on the max-abs score.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_SCORE_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

/// A maximum-likelihood fit on a (sub)model.
///
/// A fit that ran out of iterations is returned with `converged == false`
/// rather than as an error, so that callers can decide how to react.
#[derive(Debug, Clone)]
pub struct MleFit {
    pub beta: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Max-abs score at `beta`.
    pub score_norm: f64,
    pub log_likelihood: f64,
    /// `Sigma_n(beta)`.
    pub info: DMatrix<f64>,
}

/// MLE of the logistic model on all columns of `dataset`.
pub fn fit_mle(
    dataset: &Dataset,
    init: Option<&[f64]>,
    bounds: &ParameterBox,
    options: &MleOptions,
) -> Result<MleFit> {
    fit_mle_xy(dataset.x(), dataset.y(), init, bounds, options)
}

/// Newton-Raphson with step halving on the log-likelihood. Iterates are
/// clamped to `bounds`; hitting the boundary with a score that still points
/// outward, or saturating fitted means on rows with `|eta| > 30`, is
/// reported as [`Error::SeparationDetected`].
pub fn fit_mle_xy(
    x: &DMatrix<f64>,
    y: &[f64],
    init: Option<&[f64]>,
    bounds: &ParameterBox,
    options: &MleOptions,
) -> Result<MleFit> {
    let (n, p) = (x.nrows(), x.ncols());
    if p >= n {
        return Err(Error::InvalidArgument(format!(
            "MLE needs fewer columns than rows (p = {p}, n = {n})"
        )));
    }
    let mut beta: Vec<f64> = match init {
        Some(b) => {
            check_len(x, b);
            b.iter().map(|&v| bounds.clamp(v)).collect()
        }
        None => vec![0.0; p],
    };
    let mut eta = linear_predictor(x, &beta);
    let mut ll = log_likelihood_eta(y, &eta);
    let mut converged = false;
    let mut iterations = 0;
    let mut score;
    let mut info;

    loop {
        score = score_eta(x, y, &eta);
        info = info_eta(x, &eta);
        let score_norm = max_abs(&score);
        let chol = cholesky_with_ridge(&info)?;
        let step = chol.solve(&DVector::from_column_slice(&score));
        if score_norm <= options.tol && step.amax() <= STEP_TOL {
            converged = true;
            break;
        }
        if iterations >= options.max_iter {
            break;
        }
        iterations += 1;

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..50 {
            let cand: Vec<f64> = beta
                .iter()
                .zip(step.iter())
                .map(|(&b, &s)| bounds.clamp(b + t * s))
                .collect();
            if cand == beta {
                break;
            }
            let eta_c = linear_predictor(x, &cand);
            let ll_c = log_likelihood_eta(y, &eta_c);
            if ll_c >= ll - 1e-12 * ll.abs().max(1.0) {
                accepted = Some((cand, eta_c, ll_c));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((b, e, l)) => {
                beta = b;
                eta = e;
                ll = l;
            }
            None => {
                // Stalled: no admissible step improves the likelihood.
                score = score_eta(x, y, &eta);
                info = info_eta(x, &eta);
                converged = max_abs(&score) <= options.tol;
                break;
            }
        }
    }

    let at_bound_outward = beta.iter().zip(&score).any(|(&b, &s)| {
        b.abs() >= bounds.bound() * (1.0 - 1e-12) && s * b.signum() > options.tol
    });
    if at_bound_outward || (!converged && saturated(y, &eta)) {
        return Err(Error::SeparationDetected);
    }
    if converged && Cholesky::new(info.clone()).is_none() {
        return Err(Error::SingularInformation);
    }
    Ok(MleFit {
        score_norm: max_abs(&score),
        beta,
        converged,
        iterations,
        log_likelihood: ll,
        info,
    })
}

/// Some linear predictor exceeds 30 in magnitude and every such row is
/// fitted to within 1e-8 of its observed response.
fn saturated(y: &[f64], eta: &[f64]) -> bool {
    let mut any = false;
    for (&yi, &e) in y.iter().zip(eta) {
        if e.abs() > SATURATED_ETA {
            any = true;
            if (yi - mean(e)).abs() > SATURATED_GAP {
                return false;
            }
        }
    }
    any
}

pub(crate) fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `n u^T Sigma_n(beta)^{-1} u` via a Cholesky solve.
pub fn plugin_variance(fit: &MleFit, u: &[f64], n: usize) -> Result<f64> {
    plugin_variance_from_info(&fit.info, u, n)
}

pub fn plugin_variance_from_info(info: &DMatrix<f64>, u: &[f64], n: usize) -> Result<f64> {
    if u.len() != info.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "direction has length {}, information is {}x{}",
            u.len(),
            info.nrows(),
            info.ncols()
        )));
    }
    let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidArgument(format!(
            "direction must have unit norm, got {norm}"
        )));
    }
    let chol = cholesky_with_ridge(info)?;
    let u = DVector::from_column_slice(u);
    let v = chol.solve(&u);
    let q = u.dot(&v);
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::SingularInformation);
    }
    Ok(n as f64 * q)
}

/// Unit vector `e_j` of length `p`.
pub fn unit_vector(p: usize, j: usize) -> Vec<f64> {
    let mut u = vec![0.0; p];
    u[j] = 1.0;
    u
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Warn,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticCheck {
    pub condition: String,
    pub description: String,
    pub value: f64,
    pub threshold: f64,
    pub status: CheckStatus,
}

/// Empirical surrogates for the regularity conditions on the design.
/// Advisory only: nothing here blocks estimation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignDiagnostics {
    pub n: usize,
    pub p: usize,
    /// `sum_i ||x_i||^4 / (n p^2)`.
    pub row_fourth_moment: f64,
    /// `max_u sum_i (u'x_i)^4 / n` over coordinate and eigenvector probes.
    pub directional_fourth_moment: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub min_row_norm: f64,
    /// `min_i log var(Y_i)` at the worst box corner, `|eta| = B ||x_i||_1`.
    pub min_log_variance: f64,
    pub checks: Vec<DiagnosticCheck>,
}

impl DesignDiagnostics {
    pub fn warnings(&self) -> impl Iterator<Item = &DiagnosticCheck> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Warn)
    }
}

pub fn design_diagnostics(dataset: &Dataset, bounds: &ParameterBox) -> DesignDiagnostics {
    let x = dataset.x();
    let (n, p) = (x.nrows(), x.ncols());
    let nf = n as f64;

    let mut row_fourth = 0.0;
    let mut min_row_norm = f64::INFINITY;
    let mut min_log_var = f64::INFINITY;
    for i in 0..n {
        let row = x.row(i);
        let sq: f64 = row.iter().map(|v| v * v).sum();
        row_fourth += sq * sq;
        min_row_norm = min_row_norm.min(sq.sqrt());
        let l1: f64 = row.iter().map(|v| v.abs()).sum();
        min_log_var = min_log_var.min(log_variance(bounds.bound() * l1));
    }
    let row_fourth_moment = row_fourth / (nf * (p * p) as f64);

    let gram = (x.transpose() * x) / nf;
    let eig = SymmetricEigen::new(gram);
    let min_eigenvalue = eig.eigenvalues.min();
    let max_eigenvalue = eig.eigenvalues.max();

    let fourth_along = |u: &[f64]| -> f64 {
        let proj = linear_predictor(x, u);
        proj.iter().map(|v| v.powi(4)).sum::<f64>() / nf
    };
    let mut directional = 0.0f64;
    for j in 0..p {
        directional = directional.max(fourth_along(&unit_vector(p, j)));
    }
    for k in 0..p {
        let u: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        directional = directional.max(fourth_along(&u));
    }

    let log_floor = f64::MIN_POSITIVE.ln();
    let check = |condition: &str, description: &str, value: f64, threshold: f64, ok: bool| {
        DiagnosticCheck {
            condition: condition.into(),
            description: description.into(),
            value,
            threshold,
            status: if ok { CheckStatus::Pass } else { CheckStatus::Warn },
        }
    };
    let checks = vec![
        check(
            "i",
            "sum of fourth powers of row norms over n p^2",
            row_fourth_moment,
            10.0,
            row_fourth_moment <= 10.0,
        ),
        check(
            "ii",
            "largest probed directional fourth moment over n",
            directional,
            10.0,
            directional <= 10.0,
        ),
        check(
            "iii",
            "smallest eigenvalue of X'X / n",
            min_eigenvalue,
            1e-3,
            min_eigenvalue >= 1e-3,
        ),
        check(
            "iv",
            "smallest row norm",
            min_row_norm,
            0.0,
            min_row_norm > 0.0,
        ),
        check(
            "v",
            "smallest log conditional variance over box corners",
            min_log_var,
            log_floor,
            min_log_var >= log_floor,
        ),
    ];
    for c in checks.iter().filter(|c| c.status == CheckStatus::Warn) {
        log::warn!("design condition ({}) flagged: {} = {}", c.condition, c.description, c.value);
    }

    DesignDiagnostics {
        n,
        p,
        row_fourth_moment,
        directional_fourth_moment: directional,
        min_eigenvalue,
        max_eigenvalue,
        min_row_norm,
        min_log_variance: min_log_var,
        checks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::build_dataset;

    fn ds(y: &[f64], rows: &[&[f64]]) -> Dataset {
        let d = rows[0].len();
        let x: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        let labels = (0..d).map(|j| format!("c{j}")).collect();
        build_dataset(y.to_vec(), x, labels).unwrap()
    }

    #[test]
    fn mean_values() {
        assert_eq!(mean(0.0), 0.5);
        let m = mean(700.0);
        assert_eq!(m, 1.0);
        assert!((mean(3f64.ln()) - 0.75).abs() < 1e-15);
        assert!(mean(-700.0) > 0.0);
        assert!((mean(-2.0) + mean(2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn log_likelihood_values() {
        let d = ds(&[0.0, 1.0, 1.0], &[&[1.0, 2.0], &[-1.0, 0.5], &[3.0, 1.0]]);
        let ll = log_likelihood(&d, &[0.0, 0.0]);
        assert!((ll - 3.0 * 0.5f64.ln()).abs() < 1e-14);

        let one = ds(&[1.0, 0.0], &[&[3f64.ln()], &[0.0]]);
        // second row contributes log(1/2)
        let ll = log_likelihood(&one, &[1.0]) - 0.5f64.ln();
        assert!((ll - 0.75f64.ln()).abs() < 1e-14);

        let mut prev = f64::NEG_INFINITY;
        for b in [-2.0, -1.0, 0.0, 1.0, 2.0] {
            let v = log_likelihood(&ds(&[1.0, 1.0], &[&[1.0], &[1.0]]), &[b]);
            assert!(v > prev && v <= 0.0);
            prev = v;
        }
        // extreme predictors stay finite
        assert!(log_likelihood(&ds(&[0.0, 1.0], &[&[800.0], &[-800.0]]), &[1.0]).is_finite());
    }

    #[test]
    fn score_example() {
        let d = ds(&[1.0, 0.0], &[&[2.0], &[0.0]]);
        assert_eq!(score(&d, &[0.0]), vec![1.0]);
    }

    #[test]
    fn info_example() {
        let d = ds(&[1.0, 0.0], &[&[1.0], &[1.0]]);
        let info = fisher_info(&d, &[0.0]);
        assert_eq!(info[(0, 0)], 0.5);
    }

    #[test]
    fn symmetric_null_mle_is_zero() {
        let d = ds(&[0.0, 1.0, 0.0, 1.0], &[&[1.0], &[1.0], &[-1.0], &[-1.0]]);
        let fit = fit_mle(&d, None, &ParameterBox::default(), &MleOptions::default()).unwrap();
        assert!(fit.converged);
        assert_eq!(fit.beta, vec![0.0]);
        assert_eq!(fit.iterations, 0);
    }

    #[test]
    fn separation_is_detected() {
        let d = ds(
            &[0.0, 0.0, 1.0, 1.0, 1.0],
            &[&[-2.0], &[-1.0], &[1.0], &[2.0], &[0.5]],
        );
        let err = fit_mle(&d, None, &ParameterBox::default(), &MleOptions::default()).unwrap_err();
        assert!(matches!(err, Error::SeparationDetected), "{err:?}");
    }

    #[test]
    fn quasi_separation_is_detected() {
        // Column 2 separates the data except for tied zero rows.
        let d = ds(
            &[0.0, 1.0, 0.0, 1.0, 1.0, 0.0],
            &[
                &[1.0, 0.0],
                &[1.0, 0.0],
                &[1.0, -1.0],
                &[1.0, 1.0],
                &[1.0, 2.0],
                &[1.0, -3.0],
            ],
        );
        let err = fit_mle(&d, None, &ParameterBox::default(), &MleOptions::default()).unwrap_err();
        assert!(matches!(err, Error::SeparationDetected), "{err:?}");
    }

    #[test]
    fn max_iter_returns_flagged_fit() {
        let d = ds(
            &[0.0, 1.0, 1.0, 0.0, 1.0],
            &[&[1.0], &[2.0], &[0.5], &[-1.0], &[-0.2]],
        );
        let opts = MleOptions {
            tol: 1e-8,
            max_iter: 1,
        };
        let fit = fit_mle(&d, None, &ParameterBox::default(), &opts).unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.iterations, 1);
    }

    #[test]
    fn p_must_be_below_n() {
        let d = ds(&[0.0, 1.0], &[&[1.0, 2.0], &[3.0, 1.0]]);
        assert!(matches!(
            fit_mle(&d, None, &ParameterBox::default(), &MleOptions::default()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn plugin_variance_scalar_and_sign() {
        let fit = MleFit {
            beta: vec![0.0],
            converged: true,
            iterations: 0,
            score_norm: 0.0,
            log_likelihood: 0.0,
            info: DMatrix::from_element(1, 1, 4.0),
        };
        assert!((plugin_variance(&fit, &[1.0], 10).unwrap() - 2.5).abs() < 1e-15);
        assert_eq!(
            plugin_variance(&fit, &[1.0], 10).unwrap(),
            plugin_variance(&fit, &[-1.0], 10).unwrap()
        );
        assert!(plugin_variance(&fit, &[0.5], 10).is_err());
    }

    #[test]
    fn plugin_variance_matches_dense_inverse() {
        let info = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let inv = info.clone().try_inverse().unwrap();
        for j in 0..3 {
            let v = plugin_variance_from_info(&info, &unit_vector(3, j), 50).unwrap();
            let oracle = 50.0 * inv[(j, j)];
            assert!(((v - oracle) / oracle).abs() < 1e-10);
        }
    }

    #[test]
    fn ridge_escalation_and_failure() {
        // PSD but singular: rescued by the ridge.
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(cholesky_with_ridge(&singular).is_ok());
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            cholesky_with_ridge(&indefinite),
            Err(Error::SingularInformation)
        ));
    }

    #[test]
    fn diagnostics_flag_zero_row_and_huge_row() {
        let d = ds(
            &[0.0, 1.0, 1.0, 0.0],
            &[&[0.0, 0.0], &[1.0, -1.0], &[0.5, 2.0], &[-1.0, 0.3]],
        );
        let rep = design_diagnostics(&d, &ParameterBox::default());
        let iv = rep.checks.iter().find(|c| c.condition == "iv").unwrap();
        assert_eq!(iv.status, CheckStatus::Warn);
        assert_eq!(rep.min_row_norm, 0.0);

        let d = ds(
            &[0.0, 1.0, 1.0, 0.0],
            &[&[1000.0, 0.0], &[1.0, -1.0], &[0.5, 2.0], &[-1.0, 0.3]],
        );
        let rep = design_diagnostics(&d, &ParameterBox::default());
        let v = rep.checks.iter().find(|c| c.condition == "v").unwrap();
        assert_eq!(v.status, CheckStatus::Warn);
        // |eta| = 15 * 1000 at the worst corner
        assert!((rep.min_log_variance - log_variance(15_000.0)).abs() < 1e-9);
        assert!(rep.min_log_variance < f64::MIN_POSITIVE.ln());
    }

    #[test]
    fn log_variance_matches_direct_evaluation() {
        for eta in [-20.0, -3.0, 0.0, 0.7, 12.0] {
            let direct = mean(eta).ln() + mean(-eta).ln();
            assert!((log_variance(eta) - direct).abs() < 1e-12);
        }
    }
}
