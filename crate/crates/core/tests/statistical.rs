//! Long Monte-Carlo checks, ignored by default. Run with
//! `cargo test -p silab-core --test statistical -- --ignored --nocapture`.

use silab_core::bcmle::SimulationRandomness;
use silab_core::simulator::{default_alpha_grid, default_tests, run_monte_carlo, MethodConfig, SimSetting, ARM_BC};
use silab_core::stats::{ks_test_normal, variance};
use silab_core::studies::{run_bias_study, BiasStudy};

fn study(n: usize, p: usize, replications: usize, seed: u64) -> BiasStudy {
    BiasStudy {
        n,
        p,
        d0: 5,
        j0: 3,
        replications,
        master_seed: seed,
        h: 200,
        randomness: SimulationRandomness::Common,
    }
}

#[test]
#[ignore = "about 5 minutes on one core"]
fn correction_does_not_inflate_variance() {
    let r = run_bias_study(&study(400, 20, 1000, 41)).unwrap();
    let bc = variance(&r.records.iter().map(|x| x.bc_mle).collect::<Vec<_>>());
    let mle = variance(&r.records.iter().map(|x| x.mle).collect::<Vec<_>>());
    eprintln!("variance BC-MLE {bc:.5}, MLE {mle:.5}, ratio {:.3}", bc / mle);
    assert!((bc / mle - 1.0).abs() <= 0.15);
}

#[test]
#[ignore = "about 15 minutes on one core"]
fn correction_reduces_bias_at_larger_n() {
    let r = run_bias_study(&study(400, 40, 2000, 42)).unwrap();
    let (bc, mle) = (r.bc_mle.mean - r.truth, r.mle.mean - r.truth);
    eprintln!("bias BC-MLE {bc:+.5} (MC se {:.5}), MLE {mle:+.5}", r.bc_mle.mc_se);
    assert!(bc.abs() < mle.abs());
}

#[test]
#[ignore = "about 90 minutes on one core"]
fn studentized_statistics_are_normal() {
    let setting = SimSetting {
        n: 400,
        d: 400,
        d0: 20,
        rho: 0.0,
        replications: 2000,
        master_seed: 43,
    };
    let report = run_monte_carlo(&setting, &MethodConfig::default(), &default_tests(), &default_alpha_grid()).unwrap();
    let ks = ks_test_normal(&report.studentized(ARM_BC));
    eprintln!("{ks:?}, failures {}", report.failures.len());
    assert!(ks.p_value >= 0.01);
}
