mod common;

use common::{coefficients, model};
use ldp_core::coefficients::{modify, Rule};
use proptest::prelude::*;

fn probes(z: &[f64]) -> Vec<f64> {
    let mut xs: Vec<f64> = (-40..=40).map(|k| k as f64 * 0.1 + 0.0137).collect();
    xs.extend_from_slice(z);
    xs
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn b_bar_is_lower_semicontinuous((a, s) in coefficients(3)) {
        let pair = modify(&a, &s);
        for c in pair.provenance() {
            let z = c.z;
            let b_left = c.a_left * c.a_left / (c.sigma_left * c.sigma_left);
            let b_right = c.a_right * c.a_right / (c.sigma_right * c.sigma_right);
            let (bbl, bbr) = pair.b_bar_limits(z);
            if c.a_left >= 0.0 && c.a_right <= 0.0 {
                prop_assert_eq!(c.rule, Rule::Sticky);
                prop_assert_eq!(pair.b_bar(z), 0.0);
            } else {
                prop_assert!((pair.b_bar(z) - b_left.min(b_right)).abs() <= 1e-12);
                prop_assert!((pair.b_bar(z) - bbl.min(bbr)).abs() <= 1e-12);
            }
            prop_assert!(pair.b_bar(z) <= bbl.min(bbr) + 1e-12);
        }
    }

    #[test]
    fn modify_is_idempotent((a, s) in coefficients(3)) {
        let once = modify(&a, &s);
        let twice = modify(once.a_bar(), once.sigma_bar());
        for x in probes(once.breakpoints()) {
            prop_assert_eq!(once.drift(x), twice.drift(x));
            prop_assert_eq!(once.diffusion(x), twice.diffusion(x));
        }
    }

    #[test]
    fn sigma_bar_keeps_ellipticity((a, s) in coefficients(3)) {
        let m = model(&a, &s, 0.0, 1.0);
        let b = m.bounds();
        let pair = modify(m.drift(), m.diffusion());
        for x in probes(pair.breakpoints()) {
            let v = pair.diffusion(x).powi(2);
            prop_assert!(b.lower <= v * (1.0 + 1e-12) && v <= b.upper * (1.0 + 1e-12), "sigma_bar^2({}) = {}", x, v);
        }
    }

    #[test]
    fn sigma_transform_is_increasing_and_lipschitz((a, s) in coefficients(3), x in -3.0..3.0f64, d in 1e-3..2.0f64) {
        let m = model(&a, &s, 0.0, 1.0);
        let pair = modify(m.drift(), m.diffusion());
        let lip = 1.0 / m.bounds().lower.sqrt();
        let inc = pair.sigma_transform(x + d) - pair.sigma_transform(x);
        prop_assert!(inc > 0.0);
        prop_assert!(inc <= lip * d * (1.0 + 1e-9));
    }

    #[test]
    fn s_transform_is_additive((a, s) in coefficients(3), x in -3.0..3.0f64, y in -3.0..3.0f64) {
        let pair = modify(&a, &s);
        // S(y) - S(x) is the integral from x to y whatever the sign of x, y
        let lo = x.min(y);
        let hi = x.max(y);
        // midpoint rule on each piece between breakpoints
        let mut cuts = vec![lo];
        cuts.extend(pair.breakpoints().iter().copied().filter(|&z| z > lo && z < hi));
        cuts.push(hi);
        let oracle: f64 = cuts
            .windows(2)
            .map(|w| {
                let n = 2000;
                let h = (w[1] - w[0]) / n as f64;
                (0..n)
                    .map(|k| {
                        let t = w[0] + (k as f64 + 0.5) * h;
                        pair.drift(t) / pair.diffusion(t).powi(2) * h
                    })
                    .sum::<f64>()
            })
            .sum();
        let sign = if y >= x { 1.0 } else { -1.0 };
        prop_assert!((pair.s_transform(y) - pair.s_transform(x) - sign * oracle).abs() < 1e-6);
    }
}
