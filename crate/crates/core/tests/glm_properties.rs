mod common;

use common::*;
use proptest::prelude::*;
use silab_core::glm::{
    fisher_info, fit_mle, log_likelihood, plugin_variance, score, unit_vector, MleOptions, ParameterBox,
};
use silab_core::Dataset;

fn design() -> impl Strategy<Value = (usize, Vec<f64>, u64)> {
    (1usize..=5, 20usize..=50, any::<u64>()).prop_map(|(p, n, seed)| (n, random_beta(p, 1.0, seed), seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn score_matches_finite_differences((n, beta, seed) in design()) {
        let ds = random_logistic(n, &beta, seed);
        let s = score(&ds, &beta);
        prop_assert!((log_likelihood(&ds, &beta) - loglik(&ds, &beta)).abs() < 1e-10 * n as f64);
        for j in 0..beta.len() {
            let h = 1e-5;
            let (mut up, mut down) = (beta.clone(), beta.clone());
            up[j] += h;
            down[j] -= h;
            let fd = (loglik(&ds, &up) - loglik(&ds, &down)) / (2.0 * h);
            prop_assert!((fd - s[j]).abs() < 1e-6 * n as f64, "j = {}: {} vs {}", j, fd, s[j]);
        }
    }

    #[test]
    fn information_is_negative_hessian((n, beta, seed) in design()) {
        let ds = random_logistic(n, &beta, seed);
        let info = fisher_info(&ds, &beta);
        let p = beta.len();
        for k in 0..p {
            let h = 1e-6;
            let (mut up, mut down) = (beta.clone(), beta.clone());
            up[k] += h;
            down[k] -= h;
            let (su, sd) = (score(&ds, &up), score(&ds, &down));
            for j in 0..p {
                let fd = -(su[j] - sd[j]) / (2.0 * h);
                prop_assert!((fd - info[(j, k)]).abs() < 1e-5 * n as f64);
            }
        }
    }

    #[test]
    fn mle_matches_coordinate_ascent((n, beta, seed) in design()) {
        let ds = random_logistic(n, &beta, seed);
        let bounds = ParameterBox::default();
        let fit = fit_mle(&ds, None, &bounds, &MleOptions::default());
        let oracle = coordinate_ascent_mle(&ds, bounds.bound());
        match (fit, oracle) {
            (Ok(fit), Some(b)) => {
                prop_assert!(fit.converged);
                prop_assert!(fit.score_norm <= 1e-8);
                for j in 0..beta.len() {
                    prop_assert!((fit.beta[j] - b[j]).abs() < 1e-5, "{:?} vs {:?}", fit.beta, b);
                }
            }
            // Both routes must agree that no interior maximizer exists.
            (Err(_), None) => {}
            (f, o) => prop_assert!(false, "solver {:?} vs oracle {:?}", f.map(|f| f.beta), o),
        }
    }

    #[test]
    fn mle_is_equivariant_under_permutations((n, beta, seed) in design(), rot in 0usize..5) {
        let ds = random_logistic(n, &beta, seed);
        let bounds = ParameterBox::default();
        let opts = MleOptions::default();
        let Ok(base) = fit_mle(&ds, None, &bounds, &opts) else { return Ok(()); };
        let p = ds.d();
        let perm: Vec<usize> = (0..p).map(|j| (j + rot) % p).collect();
        let rows: Vec<usize> = (0..n).rev().collect();
        let x = nalgebra::DMatrix::from_fn(n, p, |i, j| ds.x()[(rows[i], perm[j])]);
        let y = rows.iter().map(|&i| ds.y()[i]).collect();
        let permuted = Dataset::from_matrix(y, x).unwrap();
        let fit = fit_mle(&permuted, None, &bounds, &opts).unwrap();
        for j in 0..p {
            prop_assert!((fit.beta[j] - base.beta[perm[j]]).abs() < 1e-8);
        }
    }
    #[test]
    fn fit_does_not_decrease_likelihood((n, beta, seed) in design(), start in -2.0f64..2.0) {
        let ds = random_logistic(n, &beta, seed);
        let init = vec![start; beta.len()];
        if let Ok(fit) = fit_mle(&ds, Some(&init), &ParameterBox::default(), &MleOptions::default()) {
            prop_assert!(loglik(&ds, &fit.beta) >= loglik(&ds, &init) - 1e-12 * n as f64);
            prop_assert!((fit.log_likelihood - loglik(&ds, &fit.beta)).abs() < 1e-9 * n as f64);
        }
    }

    #[test]
    fn plugin_variance_is_positive_and_matches_inverse((n, beta, seed) in design(), j in 0usize..5) {
        let ds = random_logistic(n, &beta, seed);
        let Ok(fit) = fit_mle(&ds, None, &ParameterBox::default(), &MleOptions::default()) else { return Ok(()); };
        let j = j % beta.len();
        let v = plugin_variance(&fit, &unit_vector(beta.len(), j), n).unwrap();
        let inv = fisher_info(&ds, &fit.beta).lu().try_inverse().unwrap();
        prop_assert!(v > 0.0);
        prop_assert!((v - n as f64 * inv[(j, j)]).abs() <= 1e-8 * v, "{} vs {}", v, n as f64 * inv[(j, j)]);
    }

    #[test]
    fn row_order_does_not_change_the_fit((n, beta, seed) in design(), shift in 1usize..20) {
        let ds = random_logistic(n, &beta, seed);
        let bounds = ParameterBox::default();
        let opts = MleOptions::default();
        let Ok(base) = fit_mle(&ds, None, &bounds, &opts) else { return Ok(()); };
        let rows: Vec<usize> = (0..n).map(|i| (i * 7 + shift) % n).collect();
        if rows.iter().collect::<std::collections::HashSet<_>>().len() < n {
            return Ok(());
        }
        let x = nalgebra::DMatrix::from_fn(n, ds.d(), |i, j| ds.x()[(rows[i], j)]);
        let y = rows.iter().map(|&i| ds.y()[i]).collect();
        let fit = fit_mle(&Dataset::from_matrix(y, x).unwrap(), None, &bounds, &opts).unwrap();
        for j in 0..ds.d() {
            prop_assert!((fit.beta[j] - base.beta[j]).abs() < 1e-10, "{:?} vs {:?}", fit.beta, base.beta);
        }
    }
}
