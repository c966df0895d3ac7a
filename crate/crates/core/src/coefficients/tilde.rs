//! Coefficients of the auxiliary family whose random time change gives back
//! the original SDE, for models with piecewise constant `a / sigma^2`.
//!
//! With `z_1 < ... < z_m` the jumps of `a / sigma^2`:
//!
//! ```text
//! sigma_tilde(x) = prod_{z_k <= x} sigma(z_k+) / sigma(z_k-)
//! upsilon(x)     = sigma_tilde(x) / sigma(x)
//! a_tilde(x)     = a(x) * upsilon(x)^2
//! ```
//!
//! `a_tilde` and `sigma_tilde` are constant between the jumps, and `upsilon`
//! is continuous at every `z_k`.

use super::modified::{modify, ModifiedPair};
use super::piecewise::{merge_breakpoints, Location, PiecewiseFunction, Segment};
use crate::error::{LdpError, Result};

/// The time-change factor `upsilon = numerator / denominator` as a ratio of
/// two piecewise functions on one breakpoint set. Its square is the clock rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedFactor {
    numerator: PiecewiseFunction,
    denominator: PiecewiseFunction,
    at_breakpoints: Vec<f64>,
}

impl SpeedFactor {
    /// Ratio `numerator / denominator`; the denominator must stay positive.
    pub fn new(numerator: &PiecewiseFunction, denominator: &PiecewiseFunction) -> Result<Self> {
        let merged = merge_breakpoints(&[numerator.breakpoints(), denominator.breakpoints()]);
        let numerator = numerator.refine(&merged);
        let denominator = denominator.refine(&merged);
        let at_breakpoints = merged
            .iter()
            .map(|&z| numerator.eval(z) / denominator.eval(z))
            .collect();
        let f = SpeedFactor {
            numerator,
            denominator,
            at_breakpoints,
        };
        f.check_positive()?;
        Ok(f)
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::new(
            &PiecewiseFunction::constant(value),
            &PiecewiseFunction::constant(1.0),
        )
    }

    fn check_positive(&self) -> Result<()> {
        for (i, (lo, hi, _)) in self.denominator.pieces().enumerate() {
            let probe = |x: f64| self.segment_value(i, x);
            let mut pts = Vec::new();
            for e in [lo, hi] {
                if e.is_finite() {
                    pts.push(e);
                }
            }
            if pts.is_empty() {
                pts.push(0.0);
            }
            for x in pts {
                let v = probe(x);
                if !(v.is_finite() && v > 0.0) {
                    return Err(LdpError::InvalidFunction(format!(
                        "time-change factor not positive on segment {i}"
                    )));
                }
            }
        }
        if self
            .at_breakpoints
            .iter()
            .any(|v| !(v.is_finite() && *v > 0.0))
        {
            return Err(LdpError::InvalidFunction(
                "time-change factor not positive at a breakpoint".into(),
            ));
        }
        Ok(())
    }

    pub fn breakpoints(&self) -> &[f64] {
        self.denominator.breakpoints()
    }

    /// Value of the formula of segment `i` at `x`.
    #[inline]
    pub fn segment_value(&self, i: usize, x: f64) -> f64 {
        self.numerator.segments()[i].value(x) / self.denominator.segments()[i].value(x)
    }

    /// Segment containing `x` (breakpoints map to the right).
    pub fn segment_index(&self, x: f64) -> usize {
        self.denominator.segment_index(x)
    }

    /// `(numerator, denominator)` formulas on segment `i`.
    pub fn segment_parts(&self, i: usize) -> (Segment, Segment) {
        (self.numerator.segments()[i], self.denominator.segments()[i])
    }

    pub fn value(&self, x: f64) -> f64 {
        match self.denominator.locate(x) {
            Location::At(k) => self.at_breakpoints[k],
            Location::Inside(i) => self.segment_value(i, x),
        }
    }

    /// `upsilon^2`, the speed of the clock.
    #[inline]
    pub fn rate(&self, x: f64) -> f64 {
        let v = self.value(x);
        v * v
    }

    pub fn side_limits(&self, x: f64) -> (f64, f64) {
        match self.denominator.locate(x) {
            Location::At(k) => (self.segment_value(k, x), self.segment_value(k + 1, x)),
            Location::Inside(i) => {
                let v = self.segment_value(i, x);
                (v, v)
            }
        }
    }

    /// Breakpoints where the one-sided limits differ.
    pub fn jump_points(&self) -> Vec<f64> {
        self.breakpoints()
            .iter()
            .copied()
            .filter(|&z| {
                let (l, r) = self.side_limits(z);
                !close(l, r)
            })
            .collect()
    }

    /// `(inf, sup)` of `upsilon^2` over the real line.
    pub fn rate_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        let mut visit = |v: f64| {
            lo = lo.min(v * v);
            hi = hi.max(v * v);
        };
        for (i, (l, r, den)) in self.denominator.pieces().enumerate() {
            let num = self.numerator.segments()[i];
            for e in [l, r] {
                if e.is_finite() {
                    visit(self.segment_value(i, e));
                } else if den.is_flat() && num.is_flat() {
                    visit(self.segment_value(i, 0.0));
                } else {
                    visit(num.slope() / den.slope());
                }
            }
        }
        for &v in &self.at_breakpoints {
            visit(v);
        }
        (lo, hi)
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TildeDecomposition {
    pub a_tilde: PiecewiseFunction,
    pub sigma_tilde: PiecewiseFunction,
    pub speed: SpeedFactor,
    /// Jump points of `a / sigma^2`, the factors of the product.
    pub ratio_jumps: Vec<f64>,
}

/// Builds `(a_tilde, sigma_tilde, upsilon)`; fails unless `a / sigma^2` is piecewise constant.
pub fn tilde_decomposition(
    a: &PiecewiseFunction,
    sigma: &PiecewiseFunction,
) -> Result<TildeDecomposition> {
    let merged = merge_breakpoints(&[a.breakpoints(), sigma.breakpoints()]);
    let a = a.refine(&merged);
    let sigma = sigma.refine(&merged);

    let mut ratios = Vec::with_capacity(merged.len() + 1);
    for (i, (lo, hi, s)) in sigma.pieces().enumerate() {
        let p = a.segments()[i];
        let ratio = if s.is_flat() && p.is_flat() {
            p.intercept() / (s.intercept() * s.intercept())
        } else if p.intercept() == 0.0 && p.slope() == 0.0 {
            0.0
        } else {
            return Err(LdpError::NotCaseIII {
                location: format!("segment {i} on ({lo}, {hi})"),
            });
        };
        ratios.push(ratio);
    }

    let mut ratio_jumps = Vec::new();
    let mut product = 1.0;
    let mut tilde_segments = vec![Segment::Constant(1.0)];
    let mut upsilon_at = Vec::with_capacity(merged.len());
    for (k, &z) in merged.iter().enumerate() {
        let (sl, sr) = sigma.side_limits(z);
        let jump = !close(ratios[k], ratios[k + 1]);
        if jump {
            ratio_jumps.push(z);
            let before = product;
            product *= sr / sl;
            // continuous here: before / sl == product / sr
            upsilon_at.push(0.5 * (before / sl + product / sr));
        } else {
            upsilon_at.push(product / sigma.eval(z));
        }
        tilde_segments.push(Segment::Constant(product));
    }

    let sigma_tilde_at: Vec<f64> = merged
        .iter()
        .zip(&upsilon_at)
        .map(|(&z, &u)| sigma.eval(z) * u)
        .collect();
    let sigma_tilde = PiecewiseFunction::new(
        merged.clone(),
        tilde_segments.clone(),
        Some(sigma_tilde_at),
        None,
    )?;
    let a_tilde_segments = tilde_segments
        .iter()
        .zip(&ratios)
        .map(|(s, r)| Segment::Constant(r * s.intercept() * s.intercept()))
        .collect();
    let a_tilde_at = merged
        .iter()
        .zip(&upsilon_at)
        .map(|(&z, &u)| a.eval(z) * u * u)
        .collect();
    let a_tilde = PiecewiseFunction::new(merged.clone(), a_tilde_segments, Some(a_tilde_at), None)?;

    let mut speed = SpeedFactor::new(&sigma_tilde, &sigma)?;
    speed.at_breakpoints = upsilon_at;

    Ok(TildeDecomposition {
        a_tilde,
        sigma_tilde,
        speed,
        ratio_jumps,
    })
}

/// A point inside segment `i` for probing constant values.
fn representative(f: &PiecewiseFunction, i: usize) -> [f64; 2] {
    let (lo, hi) = f.segment_bounds(i);
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => [lo + 0.25 * (hi - lo), lo + 0.75 * (hi - lo)],
        (true, false) => [lo + 0.5, lo + 2.0],
        (false, true) => [hi - 0.5, hi - 2.0],
        (false, false) => [-1.0, 1.0],
    }
}

/// `a_hat = a_bar * upsilon^2`, `sigma_hat = sigma_bar * upsilon`, cross-checked
/// against the modification of `(a_tilde, sigma_tilde)` at every continuity
/// point of `upsilon`. At jumps of `upsilon` the modified tilde values are used.
pub fn hat_coefficients(pair: &ModifiedPair, tilde: &TildeDecomposition) -> Result<ModifiedPair> {
    let reference = modify(&tilde.a_tilde, &tilde.sigma_tilde);
    let bps = pair.breakpoints().to_vec();
    if bps != reference.breakpoints() {
        return Err(LdpError::InvalidArgument(
            "modified pair and tilde decomposition use different breakpoints".into(),
        ));
    }
    let speed = &tilde.speed;
    let tol = |v: f64| 1e-12 * v.abs().max(1.0);
    let check = |x: f64, a: f64, s: f64, ra: f64, rs: f64| -> Result<()> {
        if (a - ra).abs() > tol(ra) || (s - rs).abs() > tol(rs) {
            return Err(LdpError::ConsistencyError {
                x,
                detail: format!(
                    "(a_hat, sigma_hat) = ({a}, {s}) but modified tilde pair gives ({ra}, {rs})"
                ),
            });
        }
        Ok(())
    };

    let mut a_segs = Vec::with_capacity(bps.len() + 1);
    let mut s_segs = Vec::with_capacity(bps.len() + 1);
    for i in 0..=bps.len() {
        let probes = representative(pair.a_bar(), i);
        let x = probes[0];
        let u = speed.value(x);
        let a_hat = pair.drift(x) * u * u;
        let s_hat = pair.diffusion(x) * u;
        for &y in &probes {
            let uy = speed.value(y);
            check(
                y,
                a_hat,
                s_hat,
                pair.drift(y) * uy * uy,
                pair.diffusion(y) * uy,
            )?;
            check(y, a_hat, s_hat, reference.drift(y), reference.diffusion(y))?;
        }
        a_segs.push(Segment::Constant(a_hat));
        s_segs.push(Segment::Constant(s_hat));
    }

    let mut a_at = Vec::with_capacity(bps.len());
    let mut s_at = Vec::with_capacity(bps.len());
    for &z in &bps {
        let (ul, ur) = speed.side_limits(z);
        if close(ul, ur) {
            let u = speed.value(z);
            let (a, s) = (pair.drift(z) * u * u, pair.diffusion(z) * u);
            check(z, a, s, reference.drift(z), reference.diffusion(z))?;
            a_at.push(a);
            s_at.push(s);
        } else {
            a_at.push(reference.drift(z));
            s_at.push(reference.diffusion(z));
        }
    }

    let a_hat = PiecewiseFunction::new(bps.clone(), a_segs, Some(a_at), None)?;
    let sigma_hat = PiecewiseFunction::new(bps, s_segs, Some(s_at), None)?;
    Ok(ModifiedPair::from_parts(
        a_hat,
        sigma_hat,
        reference.provenance().to_vec(),
    ))
}
