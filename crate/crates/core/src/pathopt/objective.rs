//! The discretized action as a function of the free node values.
//!
//! Free variable `j` is node `j + 1`; node 0 is pinned at `x0` and the last
//! node is either free or pinned.

use crate::action::{cell_integrals, cell_value_grad};
use crate::coefficients::ModifiedPair;
use crate::quadrature::gl8_unit;

pub(crate) struct Problem<'a> {
    pub pair: &'a ModifiedPair,
    pub x0: f64,
    pub n: usize,
    pub dt: f64,
    /// Value of node `n` when pinned.
    pub pinned_end: Option<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Problem<'_> {
    pub fn n_free(&self) -> usize {
        if self.pinned_end.is_some() {
            self.n - 1
        } else {
            self.n
        }
    }

    pub fn nodes(&self, z: &[f64]) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.n + 1);
        v.push(self.x0);
        v.extend_from_slice(z);
        if let Some(b) = self.pinned_end {
            v.push(b);
        }
        v
    }

    pub fn free(&self, nodes: &[f64]) -> Vec<f64> {
        nodes[1..=self.n_free()].to_vec()
    }

    #[inline]
    fn cell(&self, x0: f64, x1: f64) -> f64 {
        cell_integrals(self.pair, x0, x1, self.dt).total
    }

    pub fn exact(&self, z: &[f64]) -> f64 {
        self.nodes(z)
            .windows(2)
            .map(|w| self.cell(w[0], w[1]))
            .sum()
    }

    pub fn exact_grad(&self, z: &[f64], g: &mut [f64]) -> f64 {
        let nodes = self.nodes(z);
        g.iter_mut().for_each(|v| *v = 0.0);
        let mut total = 0.0;
        for k in 0..self.n {
            let (v, d0, d1) = cell_value_grad(self.pair, nodes[k], nodes[k + 1], self.dt);
            total += v;
            if k >= 1 && k <= g.len() {
                g[k - 1] += d0;
            }
            if k < g.len() {
                g[k] += d1;
            }
        }
        total
    }

    /// Action of the two cells touching node `i` (1-based) with that node at `xi`.
    pub fn local(&self, nodes: &[f64], i: usize, xi: f64) -> f64 {
        let mut v = self.cell(nodes[i - 1], xi);
        if i < self.n {
            v += self.cell(xi, nodes[i + 1]);
        }
        v
    }

    /// Action with both coefficients replaced by their box averages of
    /// radius `rho`, integrated by 8-point Gauss–Legendre per cell.
    pub fn smoothed_grad(&self, z: &[f64], rho: f64, g: &mut [f64]) -> f64 {
        let nodes = self.nodes(z);
        g.iter_mut().for_each(|v| *v = 0.0);
        let a = self.pair.a_bar();
        let s = self.pair.sigma_bar();
        let dt = self.dt;
        let rule = gl8_unit();
        let mut total = 0.0;
        for k in 0..self.n {
            let (x0, x1) = (nodes[k], nodes[k + 1]);
            let v = (x1 - x0) / dt;
            let (mut val, mut d0, mut d1) = (0.0, 0.0, 0.0);
            for &(u, w) in &rule {
                let x = x0 + u * (x1 - x0);
                let (am, ad) = a.box_average(x, rho);
                let (sm, sd) = s.box_average(x, rho);
                let e = v - am;
                let inv2 = 1.0 / (sm * sm);
                // state derivative of 1/2 e^2 / s^2 at fixed v
                let gx = -e * ad * inv2 - e * e * sd * inv2 / sm;
                let gv = e * inv2 / dt;
                val += w * 0.5 * e * e * inv2;
                d0 += w * (-gv + gx * (1.0 - u));
                d1 += w * (gv + gx * u);
            }
            total += val * dt;
            if k >= 1 && k <= g.len() {
                g[k - 1] += d0 * dt;
            }
            if k < g.len() {
                g[k] += d1 * dt;
            }
        }
        total
    }
}
