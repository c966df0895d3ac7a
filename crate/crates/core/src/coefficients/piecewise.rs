//! Scalar functions of one real variable with finitely many jumps.
//!
//! A [`PiecewiseFunction`] is described by strictly increasing breakpoints
//! `z_1 < ... < z_m`, one constant or affine segment per open interval
//! `(-inf, z_1), (z_1, z_2), ..., (z_m, inf)`, and an explicit value at every
//! breakpoint. Left and right limits exist everywhere, so every jump is of
//! the first kind.

use crate::error::{LdpError, Result};

/// Formula used on one open interval. Affine segments are `c0 + c1 * x` in
/// the global coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    Constant(f64),
    Affine { c0: f64, c1: f64 },
}

impl Segment {
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Segment::Constant(c) => c,
            Segment::Affine { c0, c1 } => c0 + c1 * x,
        }
    }

    #[inline]
    pub fn slope(&self) -> f64 {
        match *self {
            Segment::Constant(_) => 0.0,
            Segment::Affine { c1, .. } => c1,
        }
    }

    #[inline]
    pub fn intercept(&self) -> f64 {
        match *self {
            Segment::Constant(c) => c,
            Segment::Affine { c0, .. } => c0,
        }
    }

    /// True when the segment has zero slope, whatever its declared kind.
    pub fn is_flat(&self) -> bool {
        self.slope() == 0.0
    }

    /// Exact integral over `[lo, hi]`.
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        let d = hi - lo;
        match *self {
            Segment::Constant(c) => c * d,
            Segment::Affine { c0, c1 } => d * (c0 + c1 * 0.5 * (lo + hi)),
        }
    }

    fn is_finite(&self) -> bool {
        self.intercept().is_finite() && self.slope().is_finite()
    }
}

/// Where a point sits relative to the breakpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    /// Strictly inside segment `i`.
    Inside(usize),
    /// Exactly on breakpoint `k` (between segments `k` and `k + 1`).
    At(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseFunction {
    breakpoints: Vec<f64>,
    segments: Vec<Segment>,
    at_breakpoints: Vec<f64>,
    clamp_radius: Option<f64>,
}

impl PiecewiseFunction {
    /// Builds a function from breakpoints and `breakpoints.len() + 1`
    /// segments. Values at breakpoints default to right limits.
    ///
    /// With a clamp radius `R` every breakpoint must lie in `[-R, R]`; outer
    /// affine segments are frozen at their values at `-R` and `R`, which
    /// inserts `±R` as (continuous) breakpoints when needed.
    pub fn new(
        breakpoints: Vec<f64>,
        segments: Vec<Segment>,
        at_breakpoints: Option<Vec<f64>>,
        clamp_radius: Option<f64>,
    ) -> Result<Self> {
        if segments.len() != breakpoints.len() + 1 {
            return Err(LdpError::InvalidFunction(format!(
                "{} breakpoints need {} segments, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                segments.len()
            )));
        }
        if breakpoints.iter().any(|z| !z.is_finite()) {
            return Err(LdpError::InvalidFunction("non-finite breakpoint".into()));
        }
        if let Some(k) = breakpoints.windows(2).position(|w| w[0] >= w[1]) {
            return Err(LdpError::InvalidFunction(format!(
                "breakpoints not strictly increasing at index {}",
                k + 1
            )));
        }
        if let Some(i) = segments.iter().position(|s| !s.is_finite()) {
            return Err(LdpError::InvalidFunction(format!(
                "segment {i} has non-finite coefficients"
            )));
        }
        let at_breakpoints = match at_breakpoints {
            Some(v) => {
                if v.len() != breakpoints.len() {
                    return Err(LdpError::InvalidFunction(format!(
                        "{} breakpoints need {} breakpoint values, got {}",
                        breakpoints.len(),
                        breakpoints.len(),
                        v.len()
                    )));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(LdpError::InvalidFunction(
                        "non-finite breakpoint value".into(),
                    ));
                }
                v
            }
            None => breakpoints
                .iter()
                .enumerate()
                .map(|(k, &z)| segments[k + 1].value(z))
                .collect(),
        };
        let raw = PiecewiseFunction {
            breakpoints,
            segments,
            at_breakpoints,
            clamp_radius: None,
        };
        match clamp_radius {
            None => Ok(raw),
            Some(r) => raw.clamped(r),
        }
    }

    pub fn constant(c: f64) -> Self {
        PiecewiseFunction {
            breakpoints: Vec::new(),
            segments: vec![Segment::Constant(c)],
            at_breakpoints: Vec::new(),
            clamp_radius: None,
        }
    }

    /// Piecewise constant function with right-limit breakpoint values.
    pub fn step(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(
            breakpoints,
            values.into_iter().map(Segment::Constant).collect(),
            None,
            None,
        )
    }

    fn clamped(self, r: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(LdpError::InvalidFunction(format!(
                "clamp radius must be positive, got {r}"
            )));
        }
        if let Some(z) = self.breakpoints.iter().find(|z| z.abs() > r) {
            return Err(LdpError::InvalidFunction(format!(
                "breakpoint {z} lies outside the clamp radius {r}"
            )));
        }
        let m = self.breakpoints.len();
        let first = self.segments[0];
        let last = self.segments[m];
        let mut bps = Vec::with_capacity(m + 2);
        let mut segs = Vec::with_capacity(m + 3);
        let mut ats = Vec::with_capacity(m + 2);

        let left_frozen = Segment::Constant(first.value(-r));
        if first.is_flat() || self.breakpoints.first() == Some(&-r) {
            segs.push(if first.is_flat() { first } else { left_frozen });
        } else {
            segs.push(left_frozen);
            bps.push(-r);
            ats.push(first.value(-r));
            segs.push(first);
        }
        for k in 0..m {
            bps.push(self.breakpoints[k]);
            ats.push(self.at_breakpoints[k]);
            segs.push(self.segments[k + 1]);
        }
        if !last.is_flat() {
            let right_frozen = Segment::Constant(last.value(r));
            if bps.last() == Some(&r) {
                *segs.last_mut().unwrap() = right_frozen;
            } else {
                bps.push(r);
                ats.push(last.value(r));
                segs.push(right_frozen);
            }
        }
        Ok(PiecewiseFunction {
            breakpoints: bps,
            segments: segs,
            at_breakpoints: ats,
            clamp_radius: Some(r),
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn at_breakpoints(&self) -> &[f64] {
        &self.at_breakpoints
    }

    pub fn clamp_radius(&self) -> Option<f64> {
        self.clamp_radius
    }

    #[inline]
    pub fn locate(&self, x: f64) -> Location {
        let idx = self.breakpoints.partition_point(|&z| z < x);
        if idx < self.breakpoints.len() && self.breakpoints[idx] == x {
            Location::At(idx)
        } else {
            Location::Inside(idx)
        }
    }

    /// Index of the segment whose open interval contains `x`; breakpoints
    /// map to the segment on their right.
    #[inline]
    pub fn segment_index(&self, x: f64) -> usize {
        self.breakpoints.partition_point(|&z| z <= x)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self.locate(x) {
            Location::Inside(i) => self.segments[i].value(x),
            Location::At(k) => self.at_breakpoints[k],
        }
    }

    pub fn left_limit(&self, x: f64) -> f64 {
        match self.locate(x) {
            Location::Inside(i) | Location::At(i) => self.segments[i].value(x),
        }
    }

    pub fn right_limit(&self, x: f64) -> f64 {
        match self.locate(x) {
            Location::Inside(i) => self.segments[i].value(x),
            Location::At(k) => self.segments[k + 1].value(x),
        }
    }

    /// `(f(x-), f(x+))`; equal away from breakpoints.
    pub fn side_limits(&self, x: f64) -> (f64, f64) {
        (self.left_limit(x), self.right_limit(x))
    }

    pub fn is_piecewise_constant(&self) -> bool {
        self.segments.iter().all(Segment::is_flat)
    }

    /// Open interval of segment `i` (infinite at the ends).
    pub fn segment_bounds(&self, i: usize) -> (f64, f64) {
        let lo = if i == 0 {
            f64::NEG_INFINITY
        } else {
            self.breakpoints[i - 1]
        };
        let hi = if i == self.breakpoints.len() {
            f64::INFINITY
        } else {
            self.breakpoints[i]
        };
        (lo, hi)
    }

    /// `(lo, hi, segment)` for every segment, left to right.
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, Segment)> + '_ {
        (0..self.segments.len()).map(move |i| {
            let (lo, hi) = self.segment_bounds(i);
            (lo, hi, self.segments[i])
        })
    }

    /// Same function with extra (continuous) breakpoints inserted.
    pub fn refine(&self, extra: &[f64]) -> Self {
        let mut merged = merge_breakpoints(&[&self.breakpoints, extra]);
        merged.dedup();
        let mut segments = Vec::with_capacity(merged.len() + 1);
        let mut ats = Vec::with_capacity(merged.len());
        for (k, &z) in merged.iter().enumerate() {
            let i = self.breakpoints.partition_point(|&b| b < z);
            // segment to the left of z
            let left = if k == 0 {
                self.segments[0]
            } else {
                self.segments[self.segment_index(merged[k - 1])]
            };
            segments.push(left);
            ats.push(if i < self.breakpoints.len() && self.breakpoints[i] == z {
                self.at_breakpoints[i]
            } else {
                self.segments[i].value(z)
            });
        }
        segments.push(*self.segments.last().unwrap());
        PiecewiseFunction {
            breakpoints: merged,
            segments,
            at_breakpoints: ats,
            clamp_radius: self.clamp_radius,
        }
    }

    /// Replaces the value assigned at breakpoint `k`.
    pub fn with_breakpoint_value(mut self, k: usize, value: f64) -> Self {
        self.at_breakpoints[k] = value;
        self
    }

    /// Exact integral over `[lo, hi]` (either order).
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        if lo > hi {
            return -self.integral(hi, lo);
        }
        let mut total = 0.0;
        let first = self.segment_index(lo);
        for i in first..self.segments.len() {
            let (a, b) = self.segment_bounds(i);
            if a >= hi {
                break;
            }
            let l = a.max(lo);
            let r = b.min(hi);
            if r > l {
                total += self.segments[i].integral(l, r);
            }
        }
        total
    }

    /// Box mollification `(1/2rho) * int_{x-rho}^{x+rho} f` and its exact
    /// derivative in `x`.
    pub fn box_average(&self, x: f64, rho: f64) -> (f64, f64) {
        let lo = x - rho;
        let hi = x + rho;
        let i_lo = self.segment_index(lo);
        let i_hi = self.segment_index(hi);
        let inv = 0.5 / rho;
        let deriv = (self.segments[i_hi].value(hi) - self.segments[i_lo].value(lo)) * inv;
        if i_lo == i_hi {
            let s = self.segments[i_lo];
            return (s.value(x), deriv);
        }
        (self.integral(lo, hi) * inv, deriv)
    }
}

/// Sorted union of several breakpoint lists.
pub fn merge_breakpoints(lists: &[&[f64]]) -> Vec<f64> {
    let mut all: Vec<f64> = lists.iter().flat_map(|l| l.iter().copied()).collect();
    all.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
    all.dedup();
    all
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sign_step() -> PiecewiseFunction {
        PiecewiseFunction::step(vec![0.0], vec![1.0, -1.0]).unwrap()
    }

    #[test]
    fn side_limits_of_constant() {
        let f = PiecewiseFunction::constant(3.0);
        assert_eq!(f.side_limits(0.0), (3.0, 3.0));
    }

    #[test]
    fn side_limits_at_jump() {
        assert_eq!(sign_step().side_limits(0.0), (1.0, -1.0));
        // at-breakpoint value defaults to the right limit
        assert_eq!(sign_step().eval(0.0), -1.0);
    }

    #[test]
    fn side_limits_of_affine_segment() {
        let f = PiecewiseFunction::new(
            vec![0.0, 1.0],
            vec![
                Segment::Constant(0.0),
                Segment::Affine { c0: 0.0, c1: 2.0 },
                Segment::Constant(5.0),
            ],
            None,
            None,
        )
        .unwrap();
        let (l, r) = f.side_limits(1.0);
        assert_eq!(l, 2.0);
        assert_eq!(r, 5.0);
        assert_eq!(f.eval(0.5), 1.0);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(PiecewiseFunction::step(vec![1.0, 0.0], vec![0.0; 3]).is_err());
        assert!(PiecewiseFunction::step(vec![0.0], vec![0.0]).is_err());
        assert!(PiecewiseFunction::new(
            vec![0.0],
            vec![Segment::Constant(0.0); 2],
            Some(vec![]),
            None
        )
        .is_err());
        assert!(PiecewiseFunction::step(vec![f64::NAN], vec![0.0; 2]).is_err());
    }

    #[test]
    fn clamp_freezes_outer_affine_segments() {
        let f = PiecewiseFunction::new(
            vec![],
            vec![Segment::Affine { c0: 1.0, c1: 2.0 }],
            None,
            Some(3.0),
        )
        .unwrap();
        assert_eq!(f.breakpoints(), &[-3.0, 3.0]);
        assert_eq!(f.eval(-10.0), -5.0);
        assert_eq!(f.eval(10.0), 7.0);
        assert_eq!(f.eval(1.0), 3.0);
        assert_eq!(f.side_limits(3.0), (7.0, 7.0));
        assert!(PiecewiseFunction::new(
            vec![5.0],
            vec![Segment::Constant(0.0); 2],
            None,
            Some(3.0)
        )
        .is_err());
    }

    #[test]
    fn refine_keeps_values() {
        let f = PiecewiseFunction::new(
            vec![0.0],
            vec![
                Segment::Affine { c0: 1.0, c1: 1.0 },
                Segment::Constant(-2.0),
            ],
            Some(vec![7.0]),
            None,
        )
        .unwrap();
        let g = f.refine(&[-1.0, 0.0, 2.0]);
        assert_eq!(g.breakpoints(), &[-1.0, 0.0, 2.0]);
        for x in [-3.0, -1.0, -0.5, 0.0, 1.0, 2.0, 4.0] {
            assert_eq!(f.eval(x), g.eval(x), "x = {x}");
            assert_eq!(f.side_limits(x), g.side_limits(x), "x = {x}");
        }
    }

    #[test]
    fn integral_and_box_average() {
        let f = sign_step();
        assert_eq!(f.integral(-2.0, 3.0), -1.0);
        assert_eq!(f.integral(3.0, -2.0), 1.0);
        let (v, d) = f.box_average(0.05, 0.1);
        assert!((v - (-0.5)).abs() < 1e-12);
        assert!((d - (-10.0)).abs() < 1e-12);
        assert_eq!(f.box_average(1.0, 0.1), (-1.0, 0.0));
    }
}
