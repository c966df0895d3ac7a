//! Exact solutions of `g' = a_bar(g)` for piecewise affine `a_bar`.

use serde::Serialize;

use crate::coefficients::{Location, ModifiedPair};
use crate::error::{LdpError, Result};
use crate::path::GridPath;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroEnergyTrajectory {
    #[serde(skip)]
    pub path: GridPath,
    /// Breakpoints where the flow was not unique and the fixed convention
    /// (continue to the right, or leave an equilibrium) was applied.
    pub nonunique_points: Vec<f64>,
}

/// Flow of `x' = c0 + c1 x` after time `t`.
fn flow(c0: f64, c1: f64, x: f64, t: f64) -> f64 {
    if c1 == 0.0 {
        x + c0 * t
    } else {
        let star = -c0 / c1;
        star + (x - star) * (c1 * t).exp()
    }
}

/// Time for the affine flow from `x` to reach `z`, if it ever does.
fn hit_time(c0: f64, c1: f64, x: f64, z: f64) -> Option<f64> {
    let t = if c1 == 0.0 {
        (z - x) / c0
    } else {
        let star = -c0 / c1;
        let ratio = (z - star) / (x - star);
        if !(ratio > 0.0) {
            return None;
        }
        ratio.ln() / c1
    };
    (t.is_finite() && t > 0.0).then_some(t)
}

enum Move {
    Frozen,
    Segment(usize),
}

pub fn zero_energy_detailed(
    pair: &ModifiedPair,
    x_start: f64,
    horizon: f64,
    n: usize,
) -> Result<ZeroEnergyTrajectory> {
    if n == 0 {
        return Err(LdpError::InvalidArgument(
            "zero-energy trajectory needs n >= 1".into(),
        ));
    }
    let a = pair.a_bar();
    let dt = horizon / n as f64;
    let mut values = vec![x_start; n + 1];
    let mut nonunique = Vec::new();
    let mut x = x_start;
    let mut t = 0.0;
    let mut k = 1;
    while k <= n {
        let mv = match a.locate(x) {
            Location::Inside(i) => {
                if a.segments()[i].value(x) == 0.0 {
                    Move::Frozen
                } else {
                    Move::Segment(i)
                }
            }
            Location::At(b) => {
                let (al, ar) = a.side_limits(x);
                if al >= 0.0 && ar <= 0.0 {
                    Move::Frozen
                } else {
                    if (al < 0.0 && ar > 0.0) || pair.drift(x) == 0.0 {
                        nonunique.push(x);
                    }
                    if ar > 0.0 {
                        Move::Segment(b + 1)
                    } else {
                        Move::Segment(b)
                    }
                }
            }
        };
        let i = match mv {
            Move::Frozen => {
                values[k..].iter_mut().for_each(|v| *v = x);
                break;
            }
            Move::Segment(i) => i,
        };
        let seg = a.segments()[i];
        let (c0, c1) = (seg.intercept(), seg.slope());
        let (lo, hi) = a.segment_bounds(i);
        let speed = c0 + c1 * x;
        let target = if speed > 0.0 { hi } else { lo };
        let hit = if target.is_finite() && x != target {
            hit_time(c0, c1, x, target)
        } else {
            None
        };
        let t_exit = hit.map_or(f64::INFINITY, |h| t + h);
        while k <= n && (k as f64) * dt < t_exit {
            values[k] = flow(c0, c1, x, k as f64 * dt - t);
            k += 1;
        }
        match hit {
            Some(_) if k <= n => {
                x = target;
                t = t_exit;
            }
            _ => break,
        }
    }
    Ok(ZeroEnergyTrajectory {
        path: GridPath::new(horizon, values)?,
        nonunique_points: nonunique,
    })
}

/// Solution of `g' = a_bar(g)`, `g_0 = x_start`, sampled on `n` steps.
///
/// Sticky breakpoints (`a_bar(z-) >= 0 >= a_bar(z+)`) stop the flow; at a
/// repelling breakpoint the trajectory continues to the right.
pub fn zero_energy_trajectory(
    pair: &ModifiedPair,
    x_start: f64,
    horizon: f64,
    n: usize,
) -> Result<GridPath> {
    Ok(zero_energy_detailed(pair, x_start, horizon, n)?.path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::rate_functional;
    use crate::coefficients::{modify, PiecewiseFunction, Segment};

    #[test]
    fn trivial_flows() {
        let one = PiecewiseFunction::constant(1.0);
        let p = modify(&PiecewiseFunction::constant(0.0), &one);
        let g = zero_energy_trajectory(&p, 0.3, 1.0, 4).unwrap();
        assert!(g.values().iter().all(|&v| v == 0.3));
        let p = modify(&PiecewiseFunction::constant(-0.5), &one);
        let g = zero_energy_trajectory(&p, 1.0, 2.0, 4).unwrap();
        for k in 0..=4 {
            assert!((g.values()[k] - (1.0 - 0.5 * g.time(k))).abs() < 1e-15);
        }
    }

    #[test]
    fn sticky_stop() {
        let a = PiecewiseFunction::step(vec![0.0], vec![1.0, -1.0]).unwrap();
        let p = modify(&a, &PiecewiseFunction::constant(1.0));
        let g = zero_energy_trajectory(&p, 1.0, 2.0, 8).unwrap();
        for k in 0..=8 {
            let t = g.time(k);
            let expect = if t <= 1.0 { 1.0 - t } else { 0.0 };
            assert!((g.values()[k] - expect).abs() < 1e-15);
        }
        assert!(rate_functional(&p, &g, 1.0).total < 1e-14);
    }

    #[test]
    fn repelling_point_goes_right() {
        let a = PiecewiseFunction::step(vec![0.0], vec![-1.0, 1.0]).unwrap();
        let p = modify(&a, &PiecewiseFunction::constant(1.0));
        let z = zero_energy_detailed(&p, 0.0, 1.0, 4).unwrap();
        assert_eq!(z.nonunique_points, vec![0.0]);
        assert_eq!(z.path.end(), 1.0);
    }

    #[test]
    fn affine_flow_crosses_into_constant_piece() {
        // x' = 1 - x on (-inf, 0.5), then x' = -1 on (0.5, inf): sticky at 0.5
        let a = PiecewiseFunction::new(
            vec![0.5],
            vec![
                Segment::Affine { c0: 1.0, c1: -1.0 },
                Segment::Constant(-1.0),
            ],
            None,
            None,
        )
        .unwrap();
        let p = modify(&a, &PiecewiseFunction::constant(1.0));
        let g = zero_energy_trajectory(&p, 0.0, 2.0, 20).unwrap();
        let t_hit = 2f64.ln();
        for k in 0..=20 {
            let t = g.time(k);
            let expect = if t < t_hit { 1.0 - (-t).exp() } else { 0.5 };
            assert!((g.values()[k] - expect).abs() < 1e-14);
        }
        assert!(rate_functional(&p, &g, 0.0).total < 1e-3);
    }
}
