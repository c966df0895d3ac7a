#![allow(dead_code)]

use ldp_core::coefficients::{PiecewiseFunction, SdeModel, Segment};
use proptest::prelude::*;

pub const CLAMP: f64 = 3.0;

/// Sorted breakpoints in `[-2, 2]` at least 0.1 apart.
pub fn breakpoints(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-20i32..=20, 0..=max).prop_map(|mut v| {
        v.sort_unstable();
        v.dedup();
        v.into_iter().map(|k| k as f64 * 0.1).collect()
    })
}

pub fn drift_segment() -> impl Strategy<Value = Segment> {
    prop_oneof![
        (-2.0..2.0f64).prop_map(Segment::Constant),
        (-2.0..2.0f64, -0.8..0.8f64).prop_map(|(c0, c1)| Segment::Affine { c0, c1 }),
    ]
}

pub fn diffusion_segment() -> impl Strategy<Value = Segment> {
    prop_oneof![
        (0.5..2.0f64).prop_map(Segment::Constant),
        (1.0..2.0f64, -0.25..0.25f64).prop_map(|(c0, c1)| Segment::Affine { c0, c1 }),
    ]
}

/// Piecewise constant/affine coefficients on a shared breakpoint set.
pub fn coefficients(
    max_bps: usize,
) -> impl Strategy<Value = (PiecewiseFunction, PiecewiseFunction)> {
    breakpoints(max_bps).prop_flat_map(|z| {
        let k = z.len() + 1;
        (
            Just(z),
            prop::collection::vec(drift_segment(), k),
            prop::collection::vec(diffusion_segment(), k),
        )
            .prop_map(|(z, a, s)| {
                (
                    PiecewiseFunction::new(z.clone(), a, None, Some(CLAMP)).unwrap(),
                    PiecewiseFunction::new(z, s, None, Some(CLAMP)).unwrap(),
                )
            })
    })
}

/// Piecewise constant coefficients.
pub fn constant_coefficients(
    max_bps: usize,
) -> impl Strategy<Value = (PiecewiseFunction, PiecewiseFunction)> {
    breakpoints(max_bps).prop_flat_map(|z| {
        let k = z.len() + 1;
        (
            Just(z),
            prop::collection::vec(-2.0..2.0f64, k),
            prop::collection::vec(0.5..2.0f64, k),
        )
            .prop_map(|(z, a, s)| {
                (
                    PiecewiseFunction::step(z.clone(), a).unwrap(),
                    PiecewiseFunction::step(z, s).unwrap(),
                )
            })
    })
}

pub fn model(a: &PiecewiseFunction, s: &PiecewiseFunction, x0: f64, horizon: f64) -> SdeModel {
    SdeModel::new(a.clone(), s.clone(), x0, horizon).unwrap()
}

/// Smooth path `x0 + sum c_k sin(k pi t / T)` plus a linear drift.
pub fn smooth_path(
    horizon: f64,
    n: usize,
    x0: f64,
    c: &[f64],
    slope: f64,
) -> ldp_core::path::GridPath {
    ldp_core::path::GridPath::from_fn(horizon, n, |t| {
        let u = t / horizon;
        x0 + slope * t
            + c.iter()
                .enumerate()
                .map(|(k, ck)| ck * (std::f64::consts::PI * (k + 1) as f64 * u).sin())
                .sum::<f64>()
    })
    .unwrap()
}
