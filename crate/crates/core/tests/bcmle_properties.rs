mod common;

use common::*;
use silab_core::bcmle::{fixed_point_residual, ib_fit, IbConfig, SimulationRandomness, StopReason};
use silab_core::data::Submodel;
use silab_core::glm::{fit_mle, MleOptions, ParameterBox};
use silab_core::stats::sign_test;
use silab_core::studies::standardized_design;
use silab_core::{Dataset, RandomStream};

fn config(seed: u64, h: usize) -> IbConfig {
    IbConfig {
        h,
        ..IbConfig::new(RandomStream::new(seed))
    }
}

fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[test]
fn trace_contract() {
    let bounds = ParameterBox::default();
    for seed in 0..4 {
        let ds = random_logistic(150, &random_beta(6, 0.8, seed), seed);
        let full = Submodel::full(6);
        let fit = ib_fit(&ds, &full, &config(seed, 50), &bounds).unwrap();
        let mle = fit_mle(&ds, None, &bounds, &MleOptions::default()).unwrap();
        let t = &fit.trace;
        assert_eq!(t.iterates[0], mle.beta);
        assert_eq!(t.iterates.len(), t.epsilons.len() + 1);
        assert_eq!(t.iterates.last().unwrap(), &fit.beta);
        for (k, eps) in t.epsilons.iter().enumerate() {
            assert!(eps.is_finite());
            assert!((eps - l2(&t.iterates[k + 1], &t.iterates[k])).abs() <= 1e-15 * eps.max(1.0));
        }
        let last = *t.epsilons.last().unwrap();
        match t.stop_reason {
            StopReason::Tolerance => assert!(last < t.epsilon),
            StopReason::MonteCarloResolution => {
                let k = t.iterates.len() - 1;
                let p = fit.beta.len() as f64;
                let rms = (0..fit.beta.len())
                    .map(|j| ((t.iterates[k][j] - t.iterates[k - 1][j]) / t.mc_standard_error[j]).powi(2))
                    .sum::<f64>()
                    / p;
                assert!(rms.sqrt() <= 0.5);
                assert!(last >= t.epsilon);
            }
            StopReason::MaxIterations => assert!(!t.converged),
        }
        assert!(bounds.contains(&fit.beta));
    }
}

#[test]
fn strict_tolerance_runs_to_k_max_and_flags() {
    let ds = random_logistic(120, &random_beta(4, 0.8, 5), 5);
    let cfg = IbConfig {
        mc_resolution: 0.0,
        epsilon: Some(1e-12),
        k_max: 3,
        randomness: SimulationRandomness::Fresh,
        ..config(5, 20)
    };
    let fit = ib_fit(&ds, &Submodel::full(4), &cfg, &ParameterBox::default()).unwrap();
    assert_eq!(fit.trace.epsilons.len(), 3);
    assert!(!fit.trace.converged);
    assert_eq!(fit.trace.stop_reason, StopReason::MaxIterations);
}

#[test]
fn identical_config_gives_identical_iterates_across_thread_counts() {
    let ds = random_logistic(120, &random_beta(5, 0.8, 9), 9);
    let s = Submodel::full(5);
    let run = |threads: usize, randomness| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let cfg = IbConfig {
            randomness,
            ..config(11, 40)
        };
        pool.install(|| ib_fit(&ds, &s, &cfg, &ParameterBox::default()).unwrap().trace)
    };
    for r in [SimulationRandomness::Common, SimulationRandomness::Fresh] {
        let a = run(1, r);
        assert_eq!(a, run(1, r));
        assert_eq!(a, run(3, r));
    }
}

#[test]
fn relabeling_columns_permutes_estimate() {
    let ds = random_logistic(150, &random_beta(4, 0.8, 21), 21);
    let cfg = config(4, 50);
    let bounds = ParameterBox::default();
    let base = ib_fit(&ds, &Submodel::full(4), &cfg, &bounds).unwrap();
    let perm = [2, 0, 3, 1];
    let x = nalgebra::DMatrix::from_fn(150, 4, |i, j| ds.x()[(i, perm[j])]);
    let shuffled = Dataset::from_matrix(ds.y().to_vec(), x).unwrap();
    let fit = ib_fit(&shuffled, &Submodel::full(4), &cfg, &bounds).unwrap();
    for j in 0..4 {
        assert!((fit.beta[j] - base.beta[perm[j]]).abs() < 1e-6, "{:?} vs {:?}", fit.beta, base.beta);
    }
}

#[test]
fn residual_at_output_is_within_monte_carlo_error() {
    let bounds = ParameterBox::default();
    let h = 100;
    let h_check = 10 * h;
    for seed in 0..3 {
        let ds = random_logistic(200, &random_beta(5, 0.8, 40 + seed), 40 + seed);
        let s = Submodel::full(5);
        let fit = ib_fit(&ds, &s, &config(seed, h), &bounds).unwrap();
        let cov = fit.info.clone().try_inverse().unwrap();
        let tr = cov.trace();
        let r = fixed_point_residual(&ds, &s, &fit.beta, h_check, &RandomStream::new(900 + seed), &bounds).unwrap();
        // The output carries its own Monte-Carlo error from H draws on top
        // of the H_check draws of the check.
        let bound = 3.0 * (tr * (1.0 / h as f64 + 1.0 / h_check as f64)).sqrt();
        assert!(r < bound, "seed {seed}: residual {r} vs {bound}");
    }
    let ds = random_logistic(60, &random_beta(2, 0.5, 1), 1);
    let r = fixed_point_residual(&ds, &Submodel::full(2), &[0.1, -0.1], 1, &RandomStream::new(2), &bounds).unwrap();
    assert!(r.is_finite() && r >= 0.0);
}

#[test]
fn residual_is_larger_at_uncorrected_mle() {
    // p / n = 0.2: the MLE is visibly inflated.
    let (n, p) = (100, 20);
    let bounds = ParameterBox::default();
    let x = standardized_design(n, p, &RandomStream::new(77));
    let beta: Vec<f64> = (0..p).map(|j| if j % 4 == 3 { 0.5 } else { 0.0 }).collect();
    let mut diffs = Vec::new();
    for rep in 0..40u64 {
        let y = silab_core::simulator::gen_responses(&x, &beta, &RandomStream::new(rep));
        let ds = Dataset::from_matrix(y, x.clone()).unwrap();
        let s = Submodel::full(p);
        let Ok(fit) = ib_fit(&ds, &s, &config(rep, 50), &bounds) else { continue };
        let check = RandomStream::new(5000 + rep);
        let at_ib = fixed_point_residual(&ds, &s, &fit.beta, 50, &check, &bounds).unwrap();
        let at_mle = fixed_point_residual(&ds, &s, &fit.trace.iterates[0], 50, &check, &bounds).unwrap();
        diffs.push(at_mle - at_ib);
    }
    assert!(diffs.len() >= 36);
    let t = sign_test(&diffs);
    assert!(t.p_value < 0.01, "{t:?} {diffs:?}");
}

#[test]
fn one_dimensional_correction_reduces_bias() {
    // Fixed standardized design, p = 1, beta* = 1.
    let n = 500;
    let x = standardized_design(n, 1, &RandomStream::new(3));
    let bounds = ParameterBox::default();
    let (mut mle, mut bc) = (0.0, 0.0);
    let reps = 400;
    for rep in 0..reps {
        let y = silab_core::simulator::gen_responses(&x, &[1.0], &RandomStream::new(10_000 + rep));
        let ds = Dataset::from_matrix(y, x.clone()).unwrap();
        let fit = ib_fit(&ds, &Submodel::full(1), &config(rep, 100), &bounds).unwrap();
        mle += fit.initial.beta[0] - 1.0;
        bc += fit.beta[0] - 1.0;
    }
    let (mle, bc) = (mle / reps as f64, bc / reps as f64);
    assert!(bc.abs() < mle.abs(), "bias: bc {bc} mle {mle}");

    // First-order bias of a one-parameter canonical GLM:
    // -sum x^3 w (1 - 2g) / (2 I^2) with w = g (1 - g), I = sum x^2 w.
    let (mut third, mut info) = (0.0, 0.0);
    for i in 0..n {
        let xi = x[(i, 0)];
        let g = logistic(xi);
        let w = g * (1.0 - g);
        third += xi.powi(3) * w * (1.0 - 2.0 * g);
        info += xi * xi * w;
    }
    let analytic = -third / (2.0 * info * info);
    let correction = mle - bc;
    assert!(
        (correction - analytic).abs() < 0.25 * analytic.abs(),
        "mean correction {correction} vs first-order bias {analytic}"
    );
}
