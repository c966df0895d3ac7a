mod common;

use common::{constant_coefficients, smooth_path};
use ldp_core::action::{rate_functional, rate_functional_until};
use ldp_core::coefficients::{hat_coefficients, modify, tilde_decomposition};
use ldp_core::timechange::{apply_time_change, eta_clock, invert_time_change, zeta_clock};
use proptest::prelude::*;

fn coeffs3() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn clock_slopes_stay_in_speed_range((a, s) in constant_coefficients(3), c in coeffs3(), x0 in -1.0..1.0f64) {
        let tilde = tilde_decomposition(&a, &s).unwrap();
        let (lo, hi) = tilde.speed.rate_range();
        let f = smooth_path(1.0, 300, x0, &c, 0.0);
        let eta = eta_clock(&tilde.speed, &f);
        for v in eta.slopes() {
            prop_assert!(v >= lo * (1.0 - 1e-12) && v <= hi * (1.0 + 1e-12));
        }
        let zeta = zeta_clock(&tilde.speed, &f);
        for v in zeta.slopes() {
            prop_assert!(v >= (1.0 / hi) * (1.0 - 1e-12) && v <= (1.0 / lo) * (1.0 + 1e-12));
        }
        prop_assert!(eta.values().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn inversion_round_trip((a, s) in constant_coefficients(3), c in coeffs3(), x0 in -1.0..1.0f64) {
        let tilde = tilde_decomposition(&a, &s).unwrap();
        let (lo, hi) = tilde.speed.rate_range();
        let f = smooth_path(1.0, 400, x0, &c, 0.0);
        let lip = (0..f.n()).map(|k| f.velocity(k).abs()).fold(0.0, f64::max);
        let (y, zeta_end) = invert_time_change(&tilde.speed, &f).unwrap();
        prop_assert!(zeta_end <= 1.0 / lo * (1.0 + 1e-12) && zeta_end >= 1.0 / hi * (1.0 - 1e-12));
        let back = apply_time_change(&tilde.speed, &y, 1.0).unwrap();
        let err = back.sup_distance(&f).unwrap();
        prop_assert!(err <= lip * f.dt() * hi / lo + 1e-12, "err {} bound {}", err, lip * f.dt() * hi / lo);
    }

    #[test]
    fn action_identity_with_nonnegative_tail((a, s) in constant_coefficients(2), c in coeffs3(), x0 in -0.5..0.5f64) {
        let tilde = tilde_decomposition(&a, &s).unwrap();
        let pair = modify(&a, &s);
        let hat = hat_coefficients(&pair, &tilde).unwrap();
        let (lo, _) = tilde.speed.rate_range();
        let aux = 1.1 / lo;
        let y = smooth_path(aux, 4000, x0, &c, 0.0);
        let f = apply_time_change(&tilde.speed, &y, 1.0).unwrap();
        let zeta = zeta_clock(&tilde.speed, &f).end();
        let j = rate_functional_until(&hat, &y, x0, zeta);
        let i = rate_functional(&pair, &f, x0).total;
        prop_assert!((j - i).abs() <= 1e-2 * (1.0 + i), "J {} I {}", j, i);
        let full = rate_functional(&hat, &y, x0).total;
        prop_assert!(full >= j - 1e-9);
    }
}
