use super::piecewise::{merge_breakpoints, PiecewiseFunction};
use crate::error::{LdpError, Result};

/// Certified constants with `|a(x)| <= C (1 + |x|)` and `c <= sigma^2(x) <= C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub upper: f64,
    pub lower: f64,
}

/// Drift and diffusion of `dX = a(X) dt + eps * sigma(X) dW`, `X_0 = x0`, on `[0, T]`.
///
/// The two coefficients always share one breakpoint set.
#[derive(Debug, Clone, PartialEq)]
pub struct SdeModel {
    drift: PiecewiseFunction,
    diffusion: PiecewiseFunction,
    x0: f64,
    horizon: f64,
    bounds: Bounds,
}

impl SdeModel {
    pub fn new(
        drift: PiecewiseFunction,
        diffusion: PiecewiseFunction,
        x0: f64,
        horizon: f64,
    ) -> Result<Self> {
        if !x0.is_finite() {
            return Err(LdpError::InvalidArgument(format!(
                "x0 must be finite, got {x0}"
            )));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(LdpError::InvalidArgument(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        let merged = merge_breakpoints(&[drift.breakpoints(), diffusion.breakpoints()]);
        let drift = drift.refine(&merged);
        let diffusion = diffusion.refine(&merged);
        let bounds = validate_bounds(&drift, &diffusion)?;
        Ok(SdeModel {
            drift,
            diffusion,
            x0,
            horizon,
            bounds,
        })
    }

    pub fn drift(&self) -> &PiecewiseFunction {
        &self.drift
    }

    pub fn diffusion(&self) -> &PiecewiseFunction {
        &self.diffusion
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn with_start(&self, x0: f64) -> Result<Self> {
        Self::new(self.drift.clone(), self.diffusion.clone(), x0, self.horizon)
    }

    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        Self::new(self.drift.clone(), self.diffusion.clone(), self.x0, horizon)
    }
}

fn describe(lo: f64, hi: f64, i: usize) -> String {
    format!("segment {i} on ({lo}, {hi})")
}

/// Certifies the growth and ellipticity bounds segment by segment.
///
/// Segments are constant or affine, so every extremum is attained at a
/// segment end (or as a limit at infinity), and `|a(x)| / (1 + |x|)` is
/// monotone on each side of zero.
pub fn validate_bounds(drift: &PiecewiseFunction, diffusion: &PiecewiseFunction) -> Result<Bounds> {
    let mut sig2_min = f64::INFINITY;
    let mut sig2_max: f64 = 0.0;
    for (i, (lo, hi, seg)) in diffusion.pieces().enumerate() {
        let s_lo = if lo.is_finite() {
            seg.value(lo)
        } else if seg.slope() == 0.0 {
            seg.intercept()
        } else {
            -seg.slope() * f64::INFINITY
        };
        let s_hi = if hi.is_finite() {
            seg.value(hi)
        } else if seg.slope() == 0.0 {
            seg.intercept()
        } else {
            seg.slope() * f64::INFINITY
        };
        let inf = s_lo.min(s_hi);
        let sup = s_lo.max(s_hi);
        if !(inf > 0.0) {
            return Err(LdpError::NonElliptic {
                location: describe(lo, hi, i),
            });
        }
        if !sup.is_finite() {
            return Err(LdpError::UnboundedGrowth {
                coefficient: "diffusion",
                location: describe(lo, hi, i),
            });
        }
        sig2_min = sig2_min.min(inf * inf);
        sig2_max = sig2_max.max(sup * sup);
    }
    for (k, (&z, &s)) in diffusion
        .breakpoints()
        .iter()
        .zip(diffusion.at_breakpoints())
        .enumerate()
    {
        if !(s > 0.0) {
            return Err(LdpError::NonElliptic {
                location: format!("breakpoint {k} at x = {z}"),
            });
        }
        sig2_min = sig2_min.min(s * s);
        sig2_max = sig2_max.max(s * s);
    }

    let ratio = |x: f64, v: f64| v.abs() / (1.0 + x.abs());
    let mut growth: f64 = 0.0;
    for (i, (lo, hi, seg)) in drift.pieces().enumerate() {
        let mut candidates = Vec::with_capacity(4);
        for end in [lo, hi] {
            if end.is_finite() {
                candidates.push(ratio(end, seg.value(end)));
            } else {
                candidates.push(seg.slope().abs());
            }
        }
        if lo < 0.0 && hi > 0.0 {
            candidates.push(seg.value(0.0).abs());
        }
        let sup = candidates.into_iter().fold(0.0, f64::max);
        if !sup.is_finite() {
            return Err(LdpError::UnboundedGrowth {
                coefficient: "drift",
                location: describe(lo, hi, i),
            });
        }
        growth = growth.max(sup);
    }
    for (&z, &v) in drift.breakpoints().iter().zip(drift.at_breakpoints()) {
        growth = growth.max(ratio(z, v));
    }

    Ok(Bounds {
        upper: growth.max(sig2_max),
        lower: sig2_min,
    })
}
