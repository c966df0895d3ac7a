//! The rate functional on grid paths and the local Lagrangian at a single jump.
//!
//! Paths are read as their piecewise-linear interpolants. On a cell with
//! velocity `v != 0` the time integral becomes `(1/|v|) int g(x) dx` over the
//! traversed state interval, which is split at breakpoints and integrated
//! exactly (closed form or Gauss–Legendre on polynomial and pole-free
//! rational pieces). A cell with `v = 0` sitting on a breakpoint uses the
//! modified breakpoint values.

use serde::Serialize;

use crate::coefficients::{Location, ModifiedPair, Segment};
use crate::error::{LdpError, Result};
use crate::path::GridPath;
use crate::quadrature::gl8_avoiding;

/// `I = I1 + I2 + I3` with `I1 = 1/2 int f'^2/sigma_bar^2`,
/// `I2 = S(f_0) - S(f_T)` and `I3 = 1/2 int B_bar(f)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActionBreakdown {
    pub total: f64,
    pub kinetic: f64,
    pub boundary: f64,
    pub potential: f64,
    /// Stationary cells sitting exactly on a breakpoint.
    pub breakpoint_cells: usize,
}

impl ActionBreakdown {
    pub fn parts_sum(&self) -> f64 {
        self.kinetic + self.boundary + self.potential
    }

    pub fn is_finite(&self) -> bool {
        self.total.is_finite()
    }
}

/// `int_lo^hi g(a(x), sigma(x)) dx` on one segment, `lo < hi`.
fn segment_integral(a: Segment, s: Segment, lo: f64, hi: f64, g: impl Fn(f64, f64) -> f64) -> f64 {
    if a.is_flat() && s.is_flat() {
        return g(a.intercept(), s.intercept()) * (hi - lo);
    }
    gl8_avoiding(lo, hi, pole(s), |x| g(a.value(x), s.value(x)))
}

/// Zero of an affine segment.
pub(crate) fn pole(s: Segment) -> Option<f64> {
    (!s.is_flat()).then(|| -s.intercept() / s.slope())
}

/// `int_lo^hi g` over `[lo, hi]` (`lo < hi`), split at breakpoints.
fn state_integral(
    pair: &ModifiedPair,
    lo: f64,
    hi: f64,
    g: impl Fn(f64, f64) -> f64 + Copy,
) -> f64 {
    let a = pair.a_bar();
    let s = pair.sigma_bar();
    let bps = a.breakpoints();
    let mut total = 0.0;
    let mut left = lo;
    let start = bps.partition_point(|&z| z <= lo);
    for &z in bps[start..].iter().take_while(|&&z| z < hi) {
        let i = a.segment_index(0.5 * (left + z));
        total += segment_integral(a.segments()[i], s.segments()[i], left, z, g);
        left = z;
    }
    let i = a.segment_index(0.5 * (left + hi));
    total + segment_integral(a.segments()[i], s.segments()[i], left, hi, g)
}

/// One-sided limits of `(a_bar, sigma_bar)` at `x`, approaching from below or above.
#[inline]
fn limit(pair: &ModifiedPair, x: f64, from_below: bool) -> (f64, f64) {
    let a = pair.a_bar();
    let i = match a.locate(x) {
        Location::Inside(i) => i,
        Location::At(k) => {
            if from_below {
                k
            } else {
                k + 1
            }
        }
    };
    (
        a.segments()[i].value(x),
        pair.sigma_bar().segments()[i].value(x),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct CellIntegrals {
    pub total: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub on_breakpoint: bool,
}

/// Action contributions of the linear segment `x0 -> x1` over time `dt`.
pub(crate) fn cell_integrals(pair: &ModifiedPair, x0: f64, x1: f64, dt: f64) -> CellIntegrals {
    if x0 == x1 {
        let a = pair.drift(x0);
        let s = pair.diffusion(x0);
        let p = 0.5 * a * a / (s * s) * dt;
        return CellIntegrals {
            total: p,
            kinetic: 0.0,
            potential: p,
            on_breakpoint: matches!(pair.a_bar().locate(x0), Location::At(_)),
        };
    }
    let v = (x1 - x0) / dt;
    let (lo, hi) = if x0 < x1 { (x0, x1) } else { (x1, x0) };
    let w = 0.5 / v.abs();
    CellIntegrals {
        total: w * state_integral(pair, lo, hi, |a, s| (v - a) * (v - a) / (s * s)),
        kinetic: w * state_integral(pair, lo, hi, |_, s| v * v / (s * s)),
        potential: w * state_integral(pair, lo, hi, |a, s| a * a / (s * s)),
        on_breakpoint: false,
    }
}

/// Cell action and its partial derivatives in `x0` and `x1`.
pub(crate) fn cell_value_grad(pair: &ModifiedPair, x0: f64, x1: f64, dt: f64) -> (f64, f64, f64) {
    let d = x1 - x0;
    if d.abs() <= 1e-12 * (1.0 + x0.abs()) {
        let m = 0.5 * (x0 + x1);
        let v = d / dt;
        let i = pair.a_bar().segment_index(m);
        let (sa, ss) = (pair.a_bar().segments()[i], pair.sigma_bar().segments()[i]);
        let (a, s) = if d == 0.0 {
            (pair.drift(m), pair.diffusion(m))
        } else {
            (sa.value(m), ss.value(m))
        };
        let e = v - a;
        let value = 0.5 * e * e / (s * s) * dt;
        // derivative of 1/2 (v - a)^2 / s^2 in the state variable
        let gx = -e * sa.slope() / (s * s) - e * e * ss.slope() / (s * s * s);
        let dv = e / (s * s);
        return (value, -dv + 0.5 * dt * gx, dv + 0.5 * dt * gx);
    }
    let v = d / dt;
    let (lo, hi) = if d > 0.0 { (x0, x1) } else { (x1, x0) };
    let sgn = d.signum();
    let g = sgn * state_integral(pair, lo, hi, |a, s| 0.5 * (v - a) * (v - a) / (s * s));
    let k = sgn * state_integral(pair, lo, hi, |a, s| (v - a) / (s * s));
    let value = dt * g / d;
    let (a1, s1) = limit(pair, x1, d > 0.0);
    let (a0, s0) = limit(pair, x0, d < 0.0);
    let g1 = 0.5 * (v - a1) * (v - a1) / (s1 * s1);
    let g0 = 0.5 * (v - a0) * (v - a0) / (s0 * s0);
    let common = dt * g / (d * d);
    let d1 = -common + dt * g1 / d + k / d;
    let d0 = common - dt * g0 / d - k / d;
    (value, d0, d1)
}

/// The rate functional of a grid path read as its linear interpolant.
///
/// A path not starting at `x0` has infinite action (`total` and `kinetic`
/// are `+inf`).
pub fn rate_functional(pair: &ModifiedPair, path: &GridPath, x0: f64) -> ActionBreakdown {
    let dt = path.dt();
    let f = path.values();
    let mut total = 0.0;
    let mut kinetic = 0.0;
    let mut potential = 0.0;
    let mut breakpoint_cells = 0;
    for w in f.windows(2) {
        let c = cell_integrals(pair, w[0], w[1], dt);
        total += c.total;
        kinetic += c.kinetic;
        potential += c.potential;
        breakpoint_cells += c.on_breakpoint as usize;
    }
    let boundary = pair.s_transform(path.start()) - pair.s_transform(path.end());
    if path.start() != x0 {
        total = f64::INFINITY;
        kinetic = f64::INFINITY;
    }
    ActionBreakdown {
        total,
        kinetic,
        boundary,
        potential,
        breakpoint_cells,
    }
}

/// Action of the interpolant restricted to `[0, t_end]`, `t_end <= T`.
pub fn rate_functional_until(pair: &ModifiedPair, path: &GridPath, x0: f64, t_end: f64) -> f64 {
    if path.start() != x0 {
        return f64::INFINITY;
    }
    let dt = path.dt();
    let f = path.values();
    let t_end = t_end.clamp(0.0, path.horizon());
    let mut total = 0.0;
    for k in 0..path.n() {
        let t0 = k as f64 * dt;
        if t0 >= t_end {
            break;
        }
        let span = (t_end - t0).min(dt);
        let x1 = if span < dt {
            f[k] + (f[k + 1] - f[k]) * span / dt
        } else {
            f[k + 1]
        };
        if span > 0.0 {
            total += cell_integrals(pair, f[k], x1, span).total;
        }
    }
    total
}

/// `(I1, I2, I3)`.
pub fn action_decomposition(pair: &ModifiedPair, path: &GridPath, x0: f64) -> (f64, f64, f64) {
    let b = rate_functional(pair, path, x0);
    (b.kinetic, b.boundary, b.potential)
}

/// Free-particle action `1/2 sum (df)^2 / dt` of the node values.
pub fn free_action(path: &GridPath) -> f64 {
    let dt = path.dt();
    path.values()
        .windows(2)
        .map(|w| (w[1] - w[0]) * (w[1] - w[0]))
        .sum::<f64>()
        * 0.5
        / dt
}

/// The path `Sigma(f_t)` on the same grid.
pub fn sigma_image(pair: &ModifiedPair, path: &GridPath) -> Result<GridPath> {
    GridPath::new(
        path.horizon(),
        path.values()
            .iter()
            .map(|&x| pair.sigma_transform(x))
            .collect(),
    )
}

/// One-sided constants `a(0 -/+)`, `sigma(0 -/+)` of a model with a single jump at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Case1Params {
    pub a_minus: f64,
    pub a_plus: f64,
    pub sigma_minus: f64,
    pub sigma_plus: f64,
}

impl Case1Params {
    pub fn new(a_minus: f64, a_plus: f64, sigma_minus: f64, sigma_plus: f64) -> Result<Self> {
        if !(sigma_minus > 0.0 && sigma_plus > 0.0) {
            return Err(LdpError::NonElliptic {
                location: format!("sigma(0-) = {sigma_minus}, sigma(0+) = {sigma_plus}"),
            });
        }
        if ![a_minus, a_plus, sigma_minus, sigma_plus]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(LdpError::InvalidArgument(
                "non-finite Case-I constant".into(),
            ));
        }
        Ok(Case1Params {
            a_minus,
            a_plus,
            sigma_minus,
            sigma_plus,
        })
    }

    fn ratio_minus(&self) -> f64 {
        self.a_minus / (self.sigma_minus * self.sigma_minus)
    }

    fn ratio_plus(&self) -> f64 {
        self.a_plus / (self.sigma_plus * self.sigma_plus)
    }
}

/// `L(x, y, z)`; `z` is the share of time spent on the right of the jump.
pub fn case1_lagrangian(p: &Case1Params, x: f64, y: f64, z: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&z) {
        return Err(LdpError::DomainError(z));
    }
    Ok(lagrangian(p, x, y, z))
}

fn lagrangian(p: &Case1Params, x: f64, y: f64, z: f64) -> f64 {
    let (am, ap, sm, sp) = (p.a_minus, p.a_plus, p.sigma_minus, p.sigma_plus);
    if x > 0.0 {
        (y - ap) * (y - ap) / (sp * sp)
    } else if x < 0.0 {
        (y - am) * (y - am) / (sm * sm)
    } else if p.ratio_minus() > p.ratio_plus() {
        let num = ap * z + am * (1.0 - z);
        num * num / (sp * sp * z + sm * sm * (1.0 - z))
    } else {
        ap * ap / (sp * sp) * z + am * am / (sm * sm) * (1.0 - z)
    }
}

/// `L(x, y) = inf_z L(x, y, z)` in closed form.
///
/// At `x = 0` the rational branch is convex in `z`; besides the ends its
/// minimum can sit at the zero of the numerator (drift pointing inward,
/// value 0) or at the stationary point `z = (u0 v' - 2 u' v0) / (u' v')`
/// with `u = a+ z + a- (1 - z)`, `v = sigma+^2 z + sigma-^2 (1 - z)`. The
/// latter can lie strictly inside `(0, 1)` when `a-` and `a+` share a sign,
/// and then `L(0, y)` is below `a_bar^2(0) / sigma_bar^2(0)`.
pub fn case1_reduced(p: &Case1Params, x: f64, y: f64) -> f64 {
    if x != 0.0 {
        return lagrangian(p, x, y, 0.0);
    }
    let ends = lagrangian(p, 0.0, y, 0.0).min(lagrangian(p, 0.0, y, 1.0));
    if p.ratio_minus() <= p.ratio_plus() {
        return ends;
    }
    if p.a_minus >= 0.0 && p.a_plus <= 0.0 {
        return 0.0;
    }
    let u0 = p.a_minus;
    let du = p.a_plus - p.a_minus;
    let v0 = p.sigma_minus * p.sigma_minus;
    let dv = p.sigma_plus * p.sigma_plus - v0;
    if du * dv != 0.0 {
        let z = (u0 * dv - 2.0 * du * v0) / (du * dv);
        if z > 0.0 && z < 1.0 {
            return ends.min(lagrangian(p, 0.0, y, z));
        }
    }
    ends
}

/// `(time with midpoint in A, same restricted to moving cells)`.
pub fn occupation_measure(path: &GridPath, set: &[f64]) -> (f64, f64) {
    let dt = path.dt();
    let mut total = 0usize;
    let mut moving = 0usize;
    for w in path.values().windows(2) {
        let m = 0.5 * (w[0] + w[1]);
        if set.contains(&m) {
            total += 1;
            if w[1] != w[0] {
                moving += 1;
            }
        }
    }
    (total as f64 * dt, moving as f64 * dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{modify, PiecewiseFunction};

    fn sign_pair() -> ModifiedPair {
        let a = PiecewiseFunction::step(vec![0.0], vec![1.0, -1.0]).unwrap();
        modify(&a, &PiecewiseFunction::constant(1.0))
    }

    fn affine_pair() -> ModifiedPair {
        let a = PiecewiseFunction::new(
            vec![-0.5, 0.4],
            vec![
                Segment::Constant(0.7),
                Segment::Affine { c0: 0.1, c1: -1.5 },
                Segment::Constant(-0.3),
            ],
            None,
            None,
        )
        .unwrap();
        let s = PiecewiseFunction::new(
            vec![0.0, 1.0],
            vec![
                Segment::Constant(0.6),
                Segment::Affine { c0: 1.0, c1: 0.8 },
                Segment::Constant(1.2),
            ],
            None,
            None,
        )
        .unwrap();
        modify(&a, &s)
    }

    /// Fine midpoint rule in time along the interpolant.
    fn oracle(pair: &ModifiedPair, path: &GridPath, sub: usize) -> f64 {
        let dt = path.dt() / sub as f64;
        let mut total = 0.0;
        for w in path.values().windows(2) {
            let v = (w[1] - w[0]) / path.dt();
            for j in 0..sub {
                let x = w[0] + (w[1] - w[0]) * (j as f64 + 0.5) / sub as f64;
                let e = v - pair.drift(x);
                total += 0.5 * e * e / pair.diffusion(x).powi(2) * dt;
            }
        }
        total
    }

    #[test]
    fn schilder_line() {
        let pair = modify(
            &PiecewiseFunction::constant(0.0),
            &PiecewiseFunction::constant(1.0),
        );
        let p = GridPath::linear(2.0, 10, 0.5, 1.5).unwrap();
        let b = rate_functional(&pair, &p, 0.5);
        assert!((b.total - 0.25).abs() < 1e-14);
        assert_eq!(b.boundary, 0.0);
        assert_eq!(b.potential, 0.0);
    }

    #[test]
    fn resting_at_sticky_point_is_free() {
        let p = GridPath::constant(1.0, 8, 0.0).unwrap();
        let b = rate_functional(&sign_pair(), &p, 0.0);
        assert_eq!(b.total, 0.0);
        assert_eq!(b.breakpoint_cells, 8);
    }

    #[test]
    fn sign_drift_line() {
        let pair = sign_pair();
        let p = GridPath::linear(1.0, 10, 0.0, 1.0).unwrap();
        let b = rate_functional(&pair, &p, 0.0);
        assert!((b.total - 2.0).abs() < 1e-12);
        assert!((oracle(&pair, &p, 20_000) - 2.0).abs() < 1e-6);
    }

    #[test]
    fn restricted_action() {
        let pair = sign_pair();
        let p = GridPath::linear(2.0, 3, 0.0, 2.0).unwrap();
        // velocity 1 against drift -1 on x > 0
        assert!((rate_functional_until(&pair, &p, 0.0, 0.5) - 1.0).abs() < 1e-12);
        let full = rate_functional(&pair, &p, 0.0).total;
        assert!((rate_functional_until(&pair, &p, 0.0, 2.0) - full).abs() < 1e-12);
    }

    #[test]
    fn wrong_start_is_infinite() {
        let p = GridPath::linear(1.0, 4, 0.1, 1.0).unwrap();
        assert_eq!(rate_functional(&sign_pair(), &p, 0.0).total, f64::INFINITY);
    }

    #[test]
    fn constant_path_off_equilibrium() {
        let a = PiecewiseFunction::constant(0.6);
        let s = PiecewiseFunction::constant(2.0);
        let pair = modify(&a, &s);
        let p = GridPath::constant(3.0, 5, 1.0).unwrap();
        let b = rate_functional(&pair, &p, 1.0);
        let expect = 0.36 * 3.0 / (2.0 * 4.0);
        assert!((b.total - expect).abs() < 1e-15);
        assert_eq!((b.kinetic, b.boundary), (0.0, 0.0));
        assert!((b.potential - expect).abs() < 1e-15);
    }

    #[test]
    fn matches_fine_oracle_with_affine_pieces() {
        let pair = affine_pair();
        let p = GridPath::from_fn(1.5, 12, |t| -0.9 + 1.6 * t - 0.4 * (4.0 * t).sin()).unwrap();
        let x0 = p.start();
        let b = rate_functional(&pair, &p, x0);
        let o = oracle(&pair, &p, 20_000);
        assert!(
            (b.total - o).abs() < 1e-6 * o.max(1.0),
            "{} vs {o}",
            b.total
        );
        assert!((b.total - b.parts_sum()).abs() < 1e-10);
    }

    #[test]
    fn kinetic_part_is_schilder_action_of_sigma_image() {
        let pair = affine_pair();
        // cells crossing a jump of sigma_bar contribute O(1/n)
        let mut last = f64::INFINITY;
        for n in [200, 2000, 20_000] {
            let p = GridPath::from_fn(1.0, n, |t| -0.7 + 2.0 * t * t).unwrap();
            let b = rate_functional(&pair, &p, p.start());
            let i0 = free_action(&sigma_image(&pair, &p).unwrap());
            let gap = b.kinetic - i0;
            assert!(gap >= -1e-12 && gap < 0.5 / n as f64 && gap < last);
            last = gap;
        }
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let pair = affine_pair();
        let dt = 0.1;
        for &(x0, x1) in &[(-0.8, 0.9), (0.2, 0.3), (1.3, -0.2), (0.05, 0.05 + 1e-7)] {
            let (v, g0, g1) = cell_value_grad(&pair, x0, x1, dt);
            let c = cell_integrals(&pair, x0, x1, dt);
            assert!((v - c.total).abs() < 1e-9 * v.max(1.0));
            let h = 1e-6;
            let f = |a: f64, b: f64| cell_integrals(&pair, a, b, dt).total;
            let fd0 = (f(x0 + h, x1) - f(x0 - h, x1)) / (2.0 * h);
            let fd1 = (f(x0, x1 + h) - f(x0, x1 - h)) / (2.0 * h);
            assert!(
                (g0 - fd0).abs() < 1e-5 * fd0.abs().max(1.0),
                "{g0} vs {fd0}"
            );
            assert!(
                (g1 - fd1).abs() < 1e-5 * fd1.abs().max(1.0),
                "{g1} vs {fd1}"
            );
        }
    }

    #[test]
    fn lagrangian_branches() {
        let p = Case1Params::new(0.5, 0.3, 1.0, 2.0).unwrap();
        assert!((case1_lagrangian(&p, 1.0, 2.0, 0.4).unwrap() - 1.7 * 1.7 / 4.0).abs() < 1e-15);
        let p = Case1Params::new(1.0, -1.0, 1.0, 1.0).unwrap();
        assert_eq!(case1_lagrangian(&p, 0.0, 0.0, 0.5).unwrap(), 0.0);
        let p = Case1Params::new(0.0, 1.0, 1.0, 1.0).unwrap();
        assert!((case1_lagrangian(&p, 0.0, 0.0, 0.3).unwrap() - 0.3).abs() < 1e-15);
        assert!(matches!(
            case1_lagrangian(&p, 0.0, 0.0, 1.5),
            Err(LdpError::DomainError(_))
        ));
    }

    #[test]
    fn reduced_lagrangian_values() {
        let p = Case1Params::new(1.0, -1.0, 1.0, 1.0).unwrap();
        assert_eq!(case1_reduced(&p, 0.0, 0.7), 0.0);
        let p = Case1Params::new(2.0, 1.0, 1.0, 2.0).unwrap();
        assert_eq!(case1_reduced(&p, 0.0, 0.0), 0.25);
        let grid = (0..=1000)
            .map(|k| case1_lagrangian(&p, 0.0, 0.0, k as f64 * 1e-3).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!((grid - 0.25).abs() < 1e-4);
        assert_eq!(
            case1_reduced(&p, -1.0, 3.0),
            case1_lagrangian(&p, -1.0, 3.0, 0.2).unwrap()
        );
    }

    #[test]
    fn reduced_lagrangian_interior_minimum() {
        // same-sign drifts with a- / sigma-^2 > a+ / sigma+^2: minimum at z = 1/3
        let p = Case1Params::new(1.0, 2.0, 1.0, 2.0).unwrap();
        let v = case1_reduced(&p, 0.0, 0.0);
        assert!((v - 8.0 / 9.0).abs() < 1e-15);
        let grid = (0..=3000)
            .map(|k| case1_lagrangian(&p, 0.0, 0.0, k as f64 / 3000.0).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!((grid - v).abs() < 1e-12);
        let pair = modify(
            &PiecewiseFunction::step(vec![0.0], vec![1.0, 2.0]).unwrap(),
            &PiecewiseFunction::step(vec![0.0], vec![1.0, 2.0]).unwrap(),
        );
        assert_eq!(pair.b_bar(0.0), 1.0);
        assert!(v < pair.b_bar(0.0));
    }

    #[test]
    fn occupation_cases() {
        let p = GridPath::linear(1.0, 4, 1.0, 2.0).unwrap();
        assert_eq!(occupation_measure(&p, &[0.0]), (0.0, 0.0));
        let p = GridPath::constant(2.0, 4, 0.3).unwrap();
        assert_eq!(occupation_measure(&p, &[0.3]), (2.0, 0.0));
        let p = GridPath::linear(1.0, 4, -0.25, 0.75).unwrap();
        let (tot, mov) = occupation_measure(&p, &[0.0]);
        assert!(mov <= p.dt() && tot == mov);
    }
}
