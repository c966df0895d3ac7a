//! Deterministic time changes between the auxiliary family and the target
//! family: clocks `eta_t(y) = int_0^t upsilon^2(y_s) ds`, their inverses,
//! `F(y)_t = y_{tau_t}` and the inverse map `y_t = f_{pi_t}`.
//!
//! Along `f = F(y)` the inverse clock is `tau_t(y) = int_0^t upsilon^-2(f_s) ds`,
//! which is what `zeta_t(f)` computes; `pi = zeta^-1`.
//!
//! Clocks are integrated exactly along the linear interpolant of the path
//! and inverted by monotone linear interpolation between grid nodes.

use serde::Serialize;

use crate::action::pole;
use crate::coefficients::SpeedFactor;
use crate::error::{LdpError, Result};
use crate::path::GridPath;
use crate::quadrature::gl8_avoiding;

/// Cumulative clock values on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Clock {
    horizon: f64,
    values: Vec<f64>,
    /// `(inf, sup)` of `upsilon^2`; every cell slope lies in between.
    slope_bounds: (f64, f64),
}

impl Clock {
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n() as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn end(&self) -> f64 {
        self.values[self.n()]
    }

    pub fn slope_bounds(&self) -> (f64, f64) {
        self.slope_bounds
    }

    pub fn slopes(&self) -> Vec<f64> {
        let dt = self.dt();
        self.values.windows(2).map(|w| (w[1] - w[0]) / dt).collect()
    }

    /// Clock value at `t`, clamped into `[0, T]`.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.n();
        let s = (t / self.horizon).clamp(0.0, 1.0) * n as f64;
        let k = (s.floor() as usize).min(n - 1);
        let w = s - k as f64;
        self.values[k] + w * (self.values[k + 1] - self.values[k])
    }

    /// Generalized inverse `inf {t : clock(t) >= s}`, clamped into `[0, T]`.
    pub fn inverse(&self, s: f64) -> f64 {
        let n = self.n();
        if s <= 0.0 {
            return 0.0;
        }
        if s >= self.end() {
            return self.horizon;
        }
        let k = (self.values.partition_point(|&v| v < s) - 1).min(n - 1);
        let (lo, hi) = (self.values[k], self.values[k + 1]);
        let w = if hi > lo { (s - lo) / (hi - lo) } else { 0.0 };
        (k as f64 + w) * self.dt()
    }
}

/// `int upsilon^power` along the segment `x0 -> x1` traversed in time `dt`.
fn cell_clock(speed: &SpeedFactor, x0: f64, x1: f64, dt: f64, power: i32) -> f64 {
    if x0 == x1 {
        return speed.value(x0).powi(power) * dt;
    }
    let (lo, hi) = if x0 < x1 { (x0, x1) } else { (x1, x0) };
    let piece = |l: f64, r: f64| {
        let (num, den) = speed.segment_parts(speed.segment_index(0.5 * (l + r)));
        if num.is_flat() && den.is_flat() {
            return (num.intercept() / den.intercept()).powi(power) * (r - l);
        }
        // upsilon^-2 has its pole where the numerator vanishes
        let p = if power > 0 { pole(den) } else { pole(num) };
        gl8_avoiding(l, r, p, |x| (num.value(x) / den.value(x)).powi(power))
    };
    let bps = speed.breakpoints();
    let mut left = lo;
    let mut total = 0.0;
    let start = bps.partition_point(|&z| z <= lo);
    for &z in bps[start..].iter().take_while(|&&z| z < hi) {
        total += piece(left, z);
        left = z;
    }
    total += piece(left, hi);
    total * dt / (hi - lo)
}

fn clock(speed: &SpeedFactor, path: &GridPath, power: i32) -> Clock {
    let dt = path.dt();
    let mut values = Vec::with_capacity(path.n() + 1);
    let mut acc = 0.0;
    values.push(0.0);
    for w in path.values().windows(2) {
        acc += cell_clock(speed, w[0], w[1], dt, power);
        values.push(acc);
    }
    let (lo, hi) = speed.rate_range();
    Clock {
        horizon: path.horizon(),
        values,
        slope_bounds: if power > 0 {
            (lo, hi)
        } else {
            (1.0 / hi, 1.0 / lo)
        },
    }
}

/// `eta_t(y) = int_0^t upsilon^2(y_s) ds` on the grid of `y`.
pub fn eta_clock(speed: &SpeedFactor, y: &GridPath) -> Clock {
    clock(speed, y, 2)
}

/// `zeta_t(f) = int_0^t upsilon^-2(f_s) ds`, equal to `tau_t(y)` whenever `f = F(y)`.
pub fn zeta_clock(speed: &SpeedFactor, f: &GridPath) -> Clock {
    clock(speed, f, -2)
}

/// `F(y)_t = y_{tau_t(y)}` on a uniform grid over `[0, horizon]` with as many
/// steps as `y`.
pub fn apply_time_change(speed: &SpeedFactor, y: &GridPath, horizon: f64) -> Result<GridPath> {
    let eta = eta_clock(speed, y);
    if eta.end() < horizon * (1.0 - 1e-12) {
        return Err(LdpError::ClockShort {
            reached: eta.end(),
            required: horizon,
        });
    }
    GridPath::from_fn(horizon, y.n(), |t| y.interp(eta.inverse(t)))
}

/// `y_t = f_{pi_t(f)}` on `[0, zeta_T(f)]`, together with `zeta_T(f)`.
pub fn invert_time_change(speed: &SpeedFactor, f: &GridPath) -> Result<(GridPath, f64)> {
    let zeta = zeta_clock(speed, f);
    let end = zeta.end();
    let y = GridPath::from_fn(end, f.n(), |s| f.interp(zeta.inverse(s)))?;
    Ok((y, end))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{tilde_decomposition, PiecewiseFunction};

    fn jump_speed() -> SpeedFactor {
        // a/sigma^2 = 0 everywhere; sigma jumps 1 -> 2, so upsilon jumps 1 -> 1/2
        let a = PiecewiseFunction::constant(0.0);
        let s = PiecewiseFunction::step(vec![0.0], vec![1.0, 2.0]).unwrap();
        tilde_decomposition(&a, &s).unwrap().speed
    }

    #[test]
    fn unit_speed_clock_is_identity() {
        let y = GridPath::from_fn(1.0, 10, |t| t.sin()).unwrap();
        let c = eta_clock(&SpeedFactor::constant(1.0).unwrap(), &y);
        for (k, v) in c.values().iter().enumerate() {
            assert!((v - y.time(k)).abs() < 1e-15);
        }
        let f = apply_time_change(&SpeedFactor::constant(1.0).unwrap(), &y, 1.0).unwrap();
        assert!(f.sup_distance(&y).unwrap() < 1e-15);
    }

    #[test]
    fn doubled_speed() {
        let speed = SpeedFactor::constant(2.0).unwrap();
        let y = GridPath::from_fn(1.0, 8, |t| t * t).unwrap();
        let c = eta_clock(&speed, &y);
        assert!((c.end() - 4.0).abs() < 1e-14);
        assert!((c.inverse(2.0) - 0.5).abs() < 1e-15);
        let f = apply_time_change(&speed, &y, 2.0).unwrap();
        for k in 0..=8 {
            let t = f.time(k);
            assert!((f.values()[k] - y.interp(t / 4.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn halved_speed_inversion() {
        let speed = SpeedFactor::constant(0.5).unwrap();
        let f = GridPath::linear(2.0, 4, 0.0, 1.0).unwrap();
        let (y, zeta) = invert_time_change(&speed, &f).unwrap();
        // eta = t/4 along y, so tau = 4t and y runs four times longer
        assert!((zeta - 8.0).abs() < 1e-14);
        for k in 0..=4 {
            assert!((y.values()[k] - f.interp(y.time(k) / 4.0)).abs() < 1e-15);
        }
        let back = apply_time_change(&speed, &y, 2.0).unwrap();
        assert!(back.sup_distance(&f).unwrap() < 1e-14);
    }

    #[test]
    fn clock_across_speed_jump() {
        let y = GridPath::linear(1.0, 4, -1.0, 1.0).unwrap();
        let c = eta_clock(&jump_speed(), &y);
        let expect = [0.0, 0.25, 0.5, 0.5625, 0.625];
        for (v, e) in c.values().iter().zip(expect) {
            assert!((v - e).abs() < 1e-15);
        }
        let slopes = c.slopes();
        assert_eq!((slopes[0], slopes[3]), (1.0, 0.25));
        let (lo, hi) = c.slope_bounds();
        assert!(slopes.iter().all(|s| *s >= lo && *s <= hi));
    }

    #[test]
    fn short_clock_is_reported() {
        let y = GridPath::linear(1.0, 4, 0.5, 1.0).unwrap();
        let err = apply_time_change(&jump_speed(), &y, 1.0).unwrap_err();
        assert!(matches!(err, LdpError::ClockShort { .. }));
    }

    #[test]
    fn round_trip() {
        let speed = jump_speed();
        let f = GridPath::from_fn(1.0, 400, |t| (5.0 * t).sin() - 0.2).unwrap();
        let (y, _) = invert_time_change(&speed, &f).unwrap();
        let back = apply_time_change(&speed, &y, 1.0).unwrap();
        let lip = 5.0;
        assert!(back.sup_distance(&f).unwrap() <= 2.0 * lip * f.dt());
    }
}
