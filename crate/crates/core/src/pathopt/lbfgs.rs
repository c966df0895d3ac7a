//! Projected limited-memory BFGS for box-constrained smooth minimization.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy)]
pub(crate) struct LbfgsOptions {
    pub memory: usize,
    pub max_iter: usize,
    /// Stop when the projected gradient sup-norm falls below this.
    pub pg_tol: f64,
    /// Stop after this many iterations with relative decrease below `1e-15`.
    pub stall_limit: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions {
            memory: 8,
            max_iter: 400,
            pg_tol: 1e-9,
            stall_limit: 4,
        }
    }
}

#[derive(Debug, Clone, Copy)]
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) struct LbfgsReport {
    pub value: f64,
    pub pg_norm: f64,
    pub converged: bool,
}

fn project(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((v, l), h) in x.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(*l, *h);
    }
}

/// `max_i |P(x - g) - x|`.
pub(crate) fn projected_gradient_norm(x: &[f64], g: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    x.iter()
        .zip(g)
        .zip(lo.iter().zip(hi))
        .map(|((&xi, &gi), (&l, &h))| ((xi - gi).clamp(l, h) - xi).abs())
        .fold(0.0, f64::max)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `f` over the box `[lo, hi]`, starting from (the projection of) `x`.
pub(crate) fn minimize(
    mut f: impl FnMut(&[f64], &mut [f64]) -> f64,
    x: &mut [f64],
    lo: &[f64],
    hi: &[f64],
    opts: LbfgsOptions,
) -> LbfgsReport {
    let n = x.len();
    project(x, lo, hi);
    let mut g = vec![0.0; n];
    let mut fx = f(x, &mut g);
    if n == 0 {
        return LbfgsReport {
            value: fx,
            pg_norm: 0.0,
            converged: true,
        };
    }
    let mut mem: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut d = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut g_trial = vec![0.0; n];
    let mut alpha_buf = vec![0.0; opts.memory];
    let mut stall = 0;

    for _ in 0..opts.max_iter {
        let pg = projected_gradient_norm(x, &g, lo, hi);
        if pg <= opts.pg_tol {
            return LbfgsReport {
                value: fx,
                pg_norm: pg,
                converged: true,
            };
        }
        // variables held at a bound by the gradient
        let active: Vec<bool> = (0..n)
            .map(|i| (x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0))
            .collect();
        for i in 0..n {
            d[i] = if active[i] { 0.0 } else { -g[i] };
        }
        // two-loop recursion on the free subspace
        for (j, (s, y, rho)) in mem.iter().enumerate().rev() {
            let a = rho * dot(s, &d);
            alpha_buf[j] = a;
            for i in 0..n {
                d[i] -= a * y[i];
            }
        }
        if let Some((s, y, _)) = mem.back() {
            let gamma = dot(s, y) / dot(y, y);
            for v in d.iter_mut() {
                *v *= gamma;
            }
        }
        for (j, (s, y, rho)) in mem.iter().enumerate() {
            let b = rho * dot(y, &d);
            for i in 0..n {
                d[i] += (alpha_buf[j] - b) * s[i];
            }
        }
        for i in 0..n {
            if active[i] {
                d[i] = 0.0;
            }
        }
        if dot(&d, &g) >= 0.0 {
            mem.clear();
            for i in 0..n {
                d[i] = if active[i] { 0.0 } else { -g[i] };
            }
        }
        // first step of plain gradient descent is scaled to unit length
        let mut step = if mem.is_empty() {
            (1.0 / d.iter().map(|v| v.abs()).fold(0.0, f64::max)).min(1.0)
        } else {
            1.0
        };
        let mut accepted = false;
        let mut f_trial = fx;
        for _ in 0..60 {
            for i in 0..n {
                trial[i] = (x[i] + step * d[i]).clamp(lo[i], hi[i]);
            }
            let decrease: f64 = (0..n).map(|i| g[i] * (trial[i] - x[i])).sum();
            f_trial = f(&trial, &mut g_trial);
            if f_trial.is_finite() && f_trial <= fx + 1e-4 * decrease {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            if mem.is_empty() {
                break;
            }
            mem.clear();
            continue;
        }
        let s: Vec<f64> = (0..n).map(|i| trial[i] - x[i]).collect();
        let y: Vec<f64> = (0..n).map(|i| g_trial[i] - g[i]).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if mem.len() == opts.memory {
                mem.pop_front();
            }
            mem.push_back((s, y, 1.0 / sy));
        }
        let rel = (fx - f_trial) / fx.abs().max(1e-300);
        x.copy_from_slice(&trial);
        g.copy_from_slice(&g_trial);
        fx = f_trial;
        if rel < 1e-15 {
            stall += 1;
            if stall >= opts.stall_limit {
                break;
            }
        } else {
            stall = 0;
        }
    }
    let pg = projected_gradient_norm(x, &g, lo, hi);
    LbfgsReport {
        value: fx,
        pg_norm: pg,
        converged: pg <= opts.pg_tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64], g: &mut [f64]| {
            let (a, b) = (x[0], x[1]);
            g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            g[1] = 200.0 * (b - a * a);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        };
        let mut x = vec![-1.2, 1.0];
        let inf = f64::INFINITY;
        let r = minimize(
            f,
            &mut x,
            &[-inf, -inf],
            &[inf, inf],
            LbfgsOptions::default(),
        );
        assert!(r.value < 1e-14, "{r:?}");
        assert!((x[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn active_bound() {
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = 2.0 * (x[0] - 3.0);
            g[1] = 2.0 * (x[1] + 1.0);
            (x[0] - 3.0).powi(2) + (x[1] + 1.0).powi(2)
        };
        let mut x = vec![0.0, 0.0];
        let r = minimize(
            f,
            &mut x,
            &[-1.0, -0.5],
            &[2.0, 1.0],
            LbfgsOptions::default(),
        );
        assert!(r.converged);
        assert_eq!(x, vec![2.0, -0.5]);
    }
}
