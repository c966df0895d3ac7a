mod common;

use common::{constant_coefficients, model};
use ldp_core::coefficients::PiecewiseFunction;
use ldp_core::harness::estimate_event;
use ldp_core::pathopt::EventSpec;
use ldp_core::simulate::{
    euler_maruyama, patchwork_sample, terminal_values, Sampler, SimConfig, TiltSpec,
};
use ldp_core::stats::{ks_one_sample, normal_cdf};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use statrs::distribution::{ContinuousCDF, Normal};

fn brownian(x0: f64) -> ldp_core::coefficients::SdeModel {
    model(
        &PiecewiseFunction::constant(0.0),
        &PiecewiseFunction::constant(1.0),
        x0,
        1.0,
    )
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (
        m,
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0),
    )
}

#[test]
fn euler_maruyama_brownian_moments() {
    let cfg = SimConfig::new(brownian(0.3), 0.4, 0.01, 100_000, 17).unwrap();
    let x = terminal_values(&cfg, Sampler::EulerMaruyama).unwrap();
    let (m, v) = mean_var(&x);
    let n = x.len() as f64;
    let var = 0.16;
    assert!((m - 0.3).abs() <= 4.0 * (var / n).sqrt(), "mean {m}");
    assert!(
        (v - var).abs() <= 4.0 * var * (2.0 / n).sqrt(),
        "variance {v}"
    );
}

#[test]
fn paths_are_bitwise_reproducible() {
    let a = PiecewiseFunction::step(vec![0.0], vec![1.0, -1.0]).unwrap();
    let cfg = SimConfig::new(
        model(&a, &PiecewiseFunction::constant(1.0), 0.0, 1.0),
        0.3,
        0.01,
        2000,
        5,
    )
    .unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| terminal_values(&cfg, Sampler::EulerMaruyama).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    // a single path matches its entry in the batch
    let p = euler_maruyama(&cfg, 1234).unwrap();
    assert_eq!(p.path.end().to_bits(), one[1234].to_bits());
    assert_eq!(p, euler_maruyama(&cfg, 1234).unwrap());
}

#[test]
fn patchwork_far_from_breakpoints_is_gaussian() {
    // breakpoint at 5 lies more than 10 noise standard deviations away
    let a = PiecewiseFunction::step(vec![5.0], vec![0.4, -1.0]).unwrap();
    let s = PiecewiseFunction::step(vec![5.0], vec![1.2, 2.0]).unwrap();
    let cfg = SimConfig::new(model(&a, &s, 0.0, 1.0), 0.3, 1e-3, 10_000, 8).unwrap();
    let x = terminal_values(&cfg, Sampler::Patchwork).unwrap();
    let ks = ks_one_sample(&x, normal_cdf(0.4, 0.3 * 1.2));
    assert!(ks.p_value >= 0.01, "{ks:?}");
}

#[test]
fn noiseless_patchwork_follows_drift_until_hit() {
    let a = PiecewiseFunction::step(vec![0.5], vec![0.8, -0.2]).unwrap();
    let cfg = SimConfig::new(
        model(&a, &PiecewiseFunction::constant(1.0), 0.1, 1.0),
        0.0,
        0.01,
        1,
        0,
    )
    .unwrap();
    let p = patchwork_sample(&cfg, 0).unwrap();
    for k in 0..=p.n() {
        let line = 0.1 + 0.8 * p.time(k);
        if line < 0.5 {
            assert!((p.values()[k] - line).abs() < 1e-12);
        }
    }
}

#[test]
fn tilted_gaussian_tail() {
    let eps = 0.3;
    let b = 1.0;
    let exact = 1.0 - Normal::new(0.0, eps).unwrap().cdf(b);
    let cfg = SimConfig::new(brownian(0.0), eps, 0.01, 20_000, 23).unwrap();
    let ev = EventSpec::TerminalInterval {
        lower: b,
        upper: f64::INFINITY,
    };
    let tilted = estimate_event(&cfg, &ev, Some(&TiltSpec::constant(b))).unwrap();
    assert!(
        (tilted.p_hat - exact).abs() <= 3.0 * tilted.std_error,
        "{} vs {exact}",
        tilted.p_hat
    );
    let plain = estimate_event(&cfg, &ev, None).unwrap();
    assert!(tilted.std_error < plain.std_error.max(1e-300) || plain.hits == 0);
    assert!(tilted.std_error < (exact * (1.0 - exact) / 20_000.0).sqrt());
}

#[test]
fn tilted_and_plain_estimates_agree_on_random_models() {
    let mut runner = TestRunner::new(Config {
        cases: 20,
        ..Config::default()
    });
    runner
        .run(
            &(
                constant_coefficients(2),
                -0.5..0.5f64,
                // toward the event; tilting away can leave zero tilted hits with a zero sample se
                0.0..0.6f64,
                any::<u64>(),
            ),
            |((a, s), x0, alpha, seed)| {
                let cfg = SimConfig::new(model(&a, &s, x0, 1.0), 0.5, 0.02, 20_000, seed).unwrap();
                let ev = EventSpec::TerminalInterval {
                    lower: x0 + 0.2,
                    upper: x0 + 1.5,
                };
                let plain = estimate_event(&cfg, &ev, None).unwrap();
                let tilted = estimate_event(
                    &cfg.with_epsilon(0.5),
                    &ev,
                    Some(&TiltSpec::constant(alpha)),
                )
                .unwrap();
                let se = (plain.std_error.powi(2) + tilted.std_error.powi(2)).sqrt();
                prop_assert!(
                    (plain.p_hat - tilted.p_hat).abs() <= 4.0 * se,
                    "plain {} tilted {} se {}",
                    plain.p_hat,
                    tilted.p_hat,
                    se
                );
                Ok(())
            },
        )
        .unwrap();
}

#[test]
fn halving_the_step_keeps_the_mean() {
    let a = PiecewiseFunction::step(vec![0.0], vec![1.0, -1.0]).unwrap();
    let s = PiecewiseFunction::step(vec![0.0], vec![1.0, 1.5]).unwrap();
    let m = model(&a, &s, 0.2, 1.0);
    let coarse = terminal_values(
        &SimConfig::new(m.clone(), 0.5, 0.02, 20_000, 1).unwrap(),
        Sampler::EulerMaruyama,
    )
    .unwrap();
    let fine = terminal_values(
        &SimConfig::new(m, 0.5, 0.01, 20_000, 2).unwrap(),
        Sampler::EulerMaruyama,
    )
    .unwrap();
    let (m1, v1) = mean_var(&coarse);
    let (m2, v2) = mean_var(&fine);
    let se = (v1 / 20_000.0 + v2 / 20_000.0).sqrt();
    assert!((m1 - m2).abs() < 3.0 * se, "{m1} vs {m2}, se {se}");
}
