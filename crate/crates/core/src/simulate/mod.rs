//! Small-noise samplers: Euler–Maruyama, the patchwork construction for
//! piecewise constant coefficients, and drift-tilted sampling with
//! Girsanov weights.

pub mod rng;

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::coefficients::{Location, ModifiedPair, PiecewiseFunction, SdeModel, Segment};
use crate::error::{LdpError, Result};
use crate::path::GridPath;
use rng::NormalStream;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub model: SdeModel,
    pub epsilon: f64,
    /// Requested step; the effective step is `T / round(T / h)`.
    pub h: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Keep the increments `dW_k` for later weight computation.
    pub record_noise: bool,
}

impl SimConfig {
    pub fn new(model: SdeModel, epsilon: f64, h: f64, n_paths: usize, seed: u64) -> Result<Self> {
        let cfg = SimConfig {
            model,
            epsilon,
            h,
            n_paths,
            seed,
            record_noise: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(LdpError::InvalidArgument(format!(
                "epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        if !(self.h > 0.0 && self.h <= self.model.horizon()) {
            return Err(LdpError::InvalidArgument(format!(
                "step h = {} must lie in (0, T = {}]",
                self.h,
                self.model.horizon()
            )));
        }
        Ok(())
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        SimConfig {
            epsilon,
            ..self.clone()
        }
    }

    pub fn n_steps(&self) -> usize {
        ((self.model.horizon() / self.h).round() as usize).max(1)
    }

    pub fn step(&self) -> f64 {
        self.model.horizon() / self.n_steps() as f64
    }
}

/// Bounded state-dependent drift shift `alpha`: the tilted SDE has drift
/// `a + alpha * sigma`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TiltSpec {
    #[serde(skip)]
    alpha: PiecewiseFunction,
    /// Declared bound `sup |alpha| <= gamma`.
    pub gamma: f64,
    pub sup_norm: f64,
}

fn sup_abs(f: &PiecewiseFunction) -> f64 {
    let mut sup: f64 = f
        .at_breakpoints()
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max);
    for (lo, hi, seg) in f.pieces() {
        for e in [lo, hi] {
            let v = if e.is_finite() {
                seg.value(e)
            } else if seg.is_flat() {
                seg.intercept()
            } else {
                f64::INFINITY
            };
            sup = sup.max(v.abs());
        }
    }
    sup
}

impl TiltSpec {
    pub fn new(alpha: PiecewiseFunction, gamma: f64) -> Result<Self> {
        let sup_norm = sup_abs(&alpha);
        if !sup_norm.is_finite() {
            return Err(LdpError::InvalidArgument("tilt must be bounded".into()));
        }
        if sup_norm > gamma * (1.0 + 1e-12) {
            return Err(LdpError::InvalidArgument(format!(
                "tilt sup norm {sup_norm} exceeds gamma = {gamma}"
            )));
        }
        Ok(TiltSpec {
            alpha,
            gamma,
            sup_norm,
        })
    }

    pub fn constant(alpha: f64) -> Self {
        TiltSpec {
            alpha: PiecewiseFunction::constant(alpha),
            gamma: alpha.abs(),
            sup_norm: alpha.abs(),
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn alpha(&self) -> &PiecewiseFunction {
        &self.alpha
    }

    pub fn is_zero(&self) -> bool {
        self.sup_norm == 0.0
    }

    /// Step function of the time-averaged excess drift `(f' - a_bar(f)) / sigma_bar(f)`
    /// of `path` over `bins` equal state bins spanning its range, clipped to `[-gamma, gamma]`.
    pub fn from_minimizer(
        pair: &ModifiedPair,
        path: &GridPath,
        gamma: f64,
        bins: usize,
    ) -> Result<Self> {
        if !(gamma >= 0.0) || bins == 0 {
            return Err(LdpError::InvalidArgument(
                "tilt needs gamma >= 0 and bins >= 1".into(),
            ));
        }
        let lo = path.values().iter().copied().fold(f64::INFINITY, f64::min);
        let hi = path
            .values()
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let dt = path.dt();
        if hi - lo < 1e-12 {
            let x = path.start();
            let e = -pair.drift(x) / pair.diffusion(x);
            return Self::new(PiecewiseFunction::constant(e.clamp(-gamma, gamma)), gamma);
        }
        let width = (hi - lo) / bins as f64;
        let mut sum = vec![0.0; bins];
        let mut time = vec![0.0; bins];
        for (k, w) in path.values().windows(2).enumerate() {
            let m = 0.5 * (w[0] + w[1]);
            let b = (((m - lo) / width) as usize).min(bins - 1);
            let v = path.velocity(k);
            sum[b] += (v - pair.drift(m)) / pair.diffusion(m) * dt;
            time[b] += dt;
        }
        let mut values: Vec<Option<f64>> = sum
            .iter()
            .zip(&time)
            .map(|(s, t)| (*t > 0.0).then(|| (s / t).clamp(-gamma, gamma)))
            .collect();
        // empty bins take the nearest filled bin on the left, then on the right
        let mut last = None;
        for v in values.iter_mut() {
            match v {
                Some(x) => last = Some(*x),
                None => *v = last,
            }
        }
        let first = values.iter().flatten().next().copied().unwrap_or(0.0);
        let values: Vec<f64> = values.into_iter().map(|v| v.unwrap_or(first)).collect();
        let edges = (1..bins).map(|j| lo + j as f64 * width).collect();
        Self::new(PiecewiseFunction::step(edges, values)?, gamma)
    }
}

/// Which density to attach to a sampled path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightDirection {
    /// `dP/dQ` evaluated on tilted paths: `exp[-sum alpha dW / eps - sum alpha^2 h / (2 eps^2)]`.
    TiltedToOriginal,
    /// `dQ/dP` evaluated on original paths: `exp[+sum alpha dW / eps - sum alpha^2 h / (2 eps^2)]`.
    OriginalToTilted,
}

/// A sampled path with optional noise record and log-weight (0 without tilt).
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub path: GridPath,
    pub noise: Option<Vec<f64>>,
    pub log_weight: f64,
}

impl SamplePath {
    pub fn weight(&self) -> f64 {
        self.log_weight.exp()
    }
}

/// Euler–Maruyama with an optional tilt; calls `visit(k, x_k)` for every
/// node `k >= 1` and stops early when it returns `false`. Returns the last
/// state and the `TiltedToOriginal` log-weight.
pub(crate) fn em_kernel(
    cfg: &SimConfig,
    path_index: u64,
    tilt: Option<&TiltSpec>,
    mut noise: Option<&mut Vec<f64>>,
    mut visit: impl FnMut(usize, f64) -> bool,
) -> (f64, f64) {
    let model = &cfg.model;
    let a = model.drift();
    let s = model.diffusion();
    let n = cfg.n_steps();
    let h = cfg.step();
    let sq = h.sqrt();
    let eps = cfg.epsilon;
    let mut stream = NormalStream::new(cfg.seed, path_index);
    let mut x = model.x0();
    let mut lw = 0.0;
    let alpha = tilt.filter(|t| !t.is_zero()).map(|t| &t.alpha);
    for k in 0..n {
        let ax = a.eval(x);
        let sx = s.eval(x);
        let dw = sq * stream.next_normal();
        if let Some(buf) = noise.as_deref_mut() {
            buf.push(dw);
        }
        let drift = match alpha {
            Some(al) => {
                let v = al.eval(x);
                lw -= v * dw / eps + 0.5 * v * v * h / (eps * eps);
                ax + v * sx
            }
            None => ax,
        };
        x += drift * h + eps * sx * dw;
        if !visit(k + 1, x) {
            break;
        }
    }
    (x, lw)
}

fn sample_with(cfg: &SimConfig, path_index: u64, tilt: Option<&TiltSpec>) -> Result<SamplePath> {
    cfg.validate()?;
    if tilt.is_some_and(|t| !t.is_zero()) && cfg.epsilon == 0.0 {
        return Err(LdpError::InvalidArgument(
            "tilted sampling needs epsilon > 0".into(),
        ));
    }
    let n = cfg.n_steps();
    let mut values = Vec::with_capacity(n + 1);
    values.push(cfg.model.x0());
    let mut noise = cfg.record_noise.then(|| Vec::with_capacity(n));
    let (_, lw) = em_kernel(cfg, path_index, tilt, noise.as_mut(), |_, x| {
        values.push(x);
        true
    });
    Ok(SamplePath {
        path: GridPath::new(cfg.model.horizon(), values)?,
        noise,
        log_weight: lw,
    })
}

/// `X_{k+1} = X_k + a(X_k) h + eps sigma(X_k) sqrt(h) xi_k`, with `xi_k`
/// keyed by `(seed, path_index, k)`.
pub fn euler_maruyama(cfg: &SimConfig, path_index: u64) -> Result<SamplePath> {
    sample_with(cfg, path_index, None)
}

/// Path of the drift-shifted SDE `(a + alpha sigma, sigma)` and the weight
/// converting its law back to the original one.
pub fn tilted_sample(cfg: &SimConfig, tilt: &TiltSpec, path_index: u64) -> Result<SamplePath> {
    sample_with(cfg, path_index, Some(tilt))
}

/// Tilted paths `0 .. cfg.n_paths` in index order.
pub fn tilted_sampler<'a>(
    cfg: &'a SimConfig,
    tilt: &'a TiltSpec,
) -> impl Iterator<Item = Result<SamplePath>> + 'a {
    (0..cfg.n_paths as u64).map(move |i| tilted_sample(cfg, tilt, i))
}

/// Girsanov weight of a recorded path; `alpha` is evaluated at left nodes.
pub fn girsanov_log_weight(
    tilt: &TiltSpec,
    path: &GridPath,
    noise: &[f64],
    epsilon: f64,
    direction: WeightDirection,
) -> Result<f64> {
    if noise.len() != path.n() {
        return Err(LdpError::Misaligned {
            noise: noise.len(),
            steps: path.n(),
        });
    }
    if tilt.is_zero() {
        return Ok(0.0);
    }
    if !(epsilon > 0.0) {
        return Err(LdpError::InvalidArgument(
            "Girsanov weight needs epsilon > 0".into(),
        ));
    }
    let h = path.dt();
    let sign = match direction {
        WeightDirection::TiltedToOriginal => -1.0,
        WeightDirection::OriginalToTilted => 1.0,
    };
    let mut lw = 0.0;
    for (x, dw) in path.values().iter().zip(noise) {
        let v = tilt.alpha.eval(*x);
        lw += sign * v * dw / epsilon - 0.5 * v * v * h / (epsilon * epsilon);
    }
    Ok(lw)
}

pub fn girsanov_weight(
    tilt: &TiltSpec,
    path: &GridPath,
    noise: &[f64],
    epsilon: f64,
    direction: WeightDirection,
) -> Result<f64> {
    Ok(girsanov_log_weight(tilt, path, noise, epsilon, direction)?.exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Regime {
    /// Coefficients frozen at their values at the start.
    Initial(f64, f64),
    /// Two-sided coefficients around breakpoint `k`.
    Around(usize),
}

/// Patchwork kernel; same visitor contract as [`em_kernel`].
pub(crate) fn patchwork_kernel(
    cfg: &SimConfig,
    path_index: u64,
    mut visit: impl FnMut(usize, f64) -> bool,
) -> f64 {
    let model = &cfg.model;
    let a = model.drift();
    let s = model.diffusion();
    let bps = a.breakpoints();
    let n = cfg.n_steps();
    let h = cfg.step();
    let sq = h.sqrt();
    let eps = cfg.epsilon;
    let mut stream = NormalStream::new(cfg.seed, path_index);
    let mut x = model.x0();
    let mut regime = match a.locate(x) {
        Location::At(k) => Regime::Around(k),
        Location::Inside(_) => Regime::Initial(a.eval(x), s.eval(x)),
    };
    let seg_value = |f: &PiecewiseFunction, i: usize| match f.segments()[i] {
        Segment::Constant(c) => c,
        seg => seg.intercept(),
    };
    for k in 0..n {
        let (ax, sx) = match regime {
            Regime::Initial(ax, sx) => (ax, sx),
            Regime::Around(j) => {
                let z = bps[j];
                if x < z {
                    (seg_value(a, j), seg_value(s, j))
                } else if x > z {
                    (seg_value(a, j + 1), seg_value(s, j + 1))
                } else {
                    (a.eval(z), s.eval(z))
                }
            }
        };
        let next = x + ax * h + eps * sx * sq * stream.next_normal();
        // breakpoints crossed (or landed on) during the step; keep the one nearest to `next`
        let (lo, hi) = if x < next { (x, next) } else { (next, x) };
        let first = bps.partition_point(|&z| z < lo);
        let last = bps.partition_point(|&z| z <= hi);
        let hit = (first..last).filter(|&j| bps[j] != x).min_by(|&i, &j| {
            (bps[i] - next)
                .abs()
                .partial_cmp(&(bps[j] - next).abs())
                .unwrap()
        });
        if let Some(j) = hit {
            regime = Regime::Around(j);
        }
        x = next;
        if !visit(k + 1, x) {
            break;
        }
    }
    x
}

/// The patchwork construction for piecewise constant coefficients: a
/// constant-coefficient diffusion until the grid detects a breakpoint
/// crossing, then the two-sided diffusion around the crossed breakpoint.
pub fn patchwork_sample(cfg: &SimConfig, path_index: u64) -> Result<GridPath> {
    cfg.validate()?;
    check_piecewise_constant(&cfg.model)?;
    let mut values = Vec::with_capacity(cfg.n_steps() + 1);
    values.push(cfg.model.x0());
    patchwork_kernel(cfg, path_index, |_, x| {
        values.push(x);
        true
    });
    GridPath::new(cfg.model.horizon(), values)
}

pub(crate) fn check_piecewise_constant(model: &SdeModel) -> Result<()> {
    for (name, f) in [("drift", model.drift()), ("diffusion", model.diffusion())] {
        if let Some(i) = f.segments().iter().position(|s| !s.is_flat()) {
            return Err(LdpError::NotPiecewiseConstant {
                location: format!("{name} segment {i}"),
            });
        }
    }
    Ok(())
}

/// Sampler used for terminal-value batches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    EulerMaruyama,
    Patchwork,
}

/// `X_T` for paths `0 .. n_paths`, in index order.
pub fn terminal_values(cfg: &SimConfig, sampler: Sampler) -> Result<Vec<f64>> {
    cfg.validate()?;
    if sampler == Sampler::Patchwork {
        check_piecewise_constant(&cfg.model)?;
    }
    Ok((0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|i| match sampler {
            Sampler::EulerMaruyama => em_kernel(cfg, i, None, None, |_, _| true).0,
            Sampler::Patchwork => patchwork_kernel(cfg, i, |_, _| true),
        })
        .collect())
}

/// Length-prefixed little-endian dump: `u64` count, then `f64` values.
pub fn write_terminal_dump<W: Write>(mut out: W, values: &[f64]) -> Result<()> {
    out.write_all(&(values.len() as u64).to_le_bytes())?;
    for v in values {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_terminal_dump<R: Read>(mut input: R) -> Result<Vec<f64>> {
    let mut len = [0u8; 8];
    input.read_exact(&mut len)?;
    let n = u64::from_le_bytes(len) as usize;
    let mut values = Vec::with_capacity(n);
    let mut buf = [0u8; 8];
    for _ in 0..n {
        input.read_exact(&mut buf)?;
        values.push(f64::from_le_bytes(buf));
    }
    Ok(values)
}
