//! The lower-semicontinuous modification of a coefficient pair at its jumps.
//!
//! At a breakpoint `z` with `a(z-) >= 0 >= a(z+)` the drift is set to zero
//! and the diffusion keeps its own value at `z`. Everywhere else the pair
//! takes the one-sided limits of whichever side has the smaller `a^2/sigma^2`.

use super::piecewise::{merge_breakpoints, PiecewiseFunction};
use super::transforms;

/// Which rule produced the modified values at a breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// `a(z-) >= 0 >= a(z+)`: drift zero, diffusion keeps `sigma(z)`.
    Sticky,
    /// One-sided limits from the left.
    LeftSide,
    /// One-sided limits from the right (also the tie-break).
    RightSide,
    /// No modification applied (raw coefficient values kept).
    Raw,
}

impl Rule {
    pub fn as_str(&self) -> &'static str {
        match self {
            Rule::Sticky => "sticky",
            Rule::LeftSide => "left",
            Rule::RightSide => "right",
            Rule::Raw => "raw",
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BreakpointChoice {
    pub z: f64,
    pub rule: Rule,
    /// Both sides had equal `a^2/sigma^2`; the right side was taken.
    pub tie: bool,
    pub a_left: f64,
    pub a_right: f64,
    pub sigma_left: f64,
    pub sigma_right: f64,
    /// Raw `sigma(z)` carried over under [`Rule::Sticky`].
    pub sigma_at: f64,
    pub a_bar: f64,
    pub sigma_bar: f64,
}

/// Modified coefficients `(a_bar, sigma_bar)` on a shared breakpoint set.
#[derive(Debug, Clone, PartialEq)]
pub struct ModifiedPair {
    a_bar: PiecewiseFunction,
    sigma_bar: PiecewiseFunction,
    provenance: Vec<BreakpointChoice>,
}

/// Applies the sticky / minimal-ratio rule at every breakpoint of `a` or `sigma`.
pub fn modify(a: &PiecewiseFunction, sigma: &PiecewiseFunction) -> ModifiedPair {
    let merged = merge_breakpoints(&[a.breakpoints(), sigma.breakpoints()]);
    let mut a_bar = a.refine(&merged);
    let mut sigma_bar = sigma.refine(&merged);
    let mut provenance = Vec::with_capacity(merged.len());
    for (k, &z) in merged.iter().enumerate() {
        let (al, ar) = a_bar.side_limits(z);
        let (sl, sr) = sigma_bar.side_limits(z);
        let sigma_at = sigma_bar.eval(z);
        let (rule, tie, ab, sb) = if al >= 0.0 && ar <= 0.0 {
            (Rule::Sticky, false, 0.0, sigma_at)
        } else {
            let left = al * al / (sl * sl);
            let right = ar * ar / (sr * sr);
            if left < right {
                (Rule::LeftSide, false, al, sl)
            } else {
                (Rule::RightSide, left == right, ar, sr)
            }
        };
        a_bar = a_bar.with_breakpoint_value(k, ab);
        sigma_bar = sigma_bar.with_breakpoint_value(k, sb);
        provenance.push(BreakpointChoice {
            z,
            rule,
            tie,
            a_left: al,
            a_right: ar,
            sigma_left: sl,
            sigma_right: sr,
            sigma_at,
            a_bar: ab,
            sigma_bar: sb,
        });
    }
    ModifiedPair {
        a_bar,
        sigma_bar,
        provenance,
    }
}

impl ModifiedPair {
    /// The unmodified pair, kept for comparison against the modified rate.
    pub fn raw(a: &PiecewiseFunction, sigma: &PiecewiseFunction) -> Self {
        let merged = merge_breakpoints(&[a.breakpoints(), sigma.breakpoints()]);
        let a_bar = a.refine(&merged);
        let sigma_bar = sigma.refine(&merged);
        let provenance = merged
            .iter()
            .map(|&z| {
                let (al, ar) = a_bar.side_limits(z);
                let (sl, sr) = sigma_bar.side_limits(z);
                BreakpointChoice {
                    z,
                    rule: Rule::Raw,
                    tie: false,
                    a_left: al,
                    a_right: ar,
                    sigma_left: sl,
                    sigma_right: sr,
                    sigma_at: sigma_bar.eval(z),
                    a_bar: a_bar.eval(z),
                    sigma_bar: sigma_bar.eval(z),
                }
            })
            .collect();
        ModifiedPair {
            a_bar,
            sigma_bar,
            provenance,
        }
    }

    pub(crate) fn from_parts(
        a_bar: PiecewiseFunction,
        sigma_bar: PiecewiseFunction,
        provenance: Vec<BreakpointChoice>,
    ) -> Self {
        debug_assert_eq!(a_bar.breakpoints(), sigma_bar.breakpoints());
        ModifiedPair {
            a_bar,
            sigma_bar,
            provenance,
        }
    }

    pub fn a_bar(&self) -> &PiecewiseFunction {
        &self.a_bar
    }

    pub fn sigma_bar(&self) -> &PiecewiseFunction {
        &self.sigma_bar
    }

    pub fn provenance(&self) -> &[BreakpointChoice] {
        &self.provenance
    }

    pub fn breakpoints(&self) -> &[f64] {
        self.a_bar.breakpoints()
    }

    #[inline]
    pub fn drift(&self, x: f64) -> f64 {
        self.a_bar.eval(x)
    }

    #[inline]
    pub fn diffusion(&self, x: f64) -> f64 {
        self.sigma_bar.eval(x)
    }

    /// `B_bar(x) = a_bar^2 / sigma_bar^2`.
    pub fn b_bar(&self, x: f64) -> f64 {
        let a = self.drift(x);
        let s = self.diffusion(x);
        a * a / (s * s)
    }

    /// One-sided limits of `B_bar`.
    pub fn b_bar_limits(&self, x: f64) -> (f64, f64) {
        let (al, ar) = self.a_bar.side_limits(x);
        let (sl, sr) = self.sigma_bar.side_limits(x);
        (al * al / (sl * sl), ar * ar / (sr * sr))
    }

    /// `S(x) = int_0^x a_bar / sigma_bar^2`.
    pub fn s_transform(&self, x: f64) -> f64 {
        transforms::s_transform(self, x)
    }

    /// `Sigma(x) = int_0^x 1 / sigma_bar`.
    pub fn sigma_transform(&self, x: f64) -> f64 {
        transforms::sigma_transform(self, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn continuous_pair_is_unchanged() {
        let a = PiecewiseFunction::constant(0.7);
        let s = PiecewiseFunction::constant(1.3);
        let p = modify(&a, &s);
        assert!(p.provenance().is_empty());
        assert_eq!(p.drift(0.2), 0.7);
        assert_eq!(p.diffusion(0.2), 1.3);
    }

    #[test]
    fn sticky_rule() {
        let a = PiecewiseFunction::step(vec![0.0], vec![1.0, -1.0]).unwrap();
        let s = PiecewiseFunction::constant(1.0);
        let p = modify(&a, &s);
        assert_eq!(p.drift(0.0), 0.0);
        assert_eq!(p.diffusion(0.0), 1.0);
        assert_eq!(p.provenance()[0].rule, Rule::Sticky);
    }

    #[test]
    fn minimal_ratio_rule() {
        // ratio 4 on the left, 1/4 on the right
        let a = PiecewiseFunction::step(vec![0.0], vec![2.0, 1.0]).unwrap();
        let s = PiecewiseFunction::step(vec![0.0], vec![1.0, 2.0]).unwrap();
        let p = modify(&a, &s);
        assert_eq!(p.drift(0.0), 1.0);
        assert_eq!(p.diffusion(0.0), 2.0);
        assert_eq!(p.provenance()[0].rule, Rule::RightSide);
        assert_eq!(p.b_bar(0.0), 0.25);

        let a = PiecewiseFunction::step(vec![0.0], vec![1.0, 2.0]).unwrap();
        let s = PiecewiseFunction::step(vec![0.0], vec![2.0, 1.0]).unwrap();
        let p = modify(&a, &s);
        assert_eq!((p.drift(0.0), p.diffusion(0.0)), (1.0, 2.0));
        assert_eq!(p.provenance()[0].rule, Rule::LeftSide);
    }

    #[test]
    fn tie_goes_right() {
        let a = PiecewiseFunction::step(vec![0.0], vec![-1.0, 2.0]).unwrap();
        let s = PiecewiseFunction::step(vec![0.0], vec![1.0, 2.0]).unwrap();
        let p = modify(&a, &s);
        let c = &p.provenance()[0];
        assert!(c.tie);
        assert_eq!(c.rule, Rule::RightSide);
        assert_eq!((p.drift(0.0), p.diffusion(0.0)), (2.0, 2.0));
    }

    #[test]
    fn sticky_keeps_raw_sigma_value() {
        let a = PiecewiseFunction::step(vec![0.0], vec![0.5, -0.5]).unwrap();
        let s = PiecewiseFunction::new(
            vec![0.0],
            vec![
                super::super::Segment::Constant(1.0),
                super::super::Segment::Constant(3.0),
            ],
            Some(vec![2.0]),
            None,
        )
        .unwrap();
        let p = modify(&a, &s);
        assert_eq!(p.diffusion(0.0), 2.0);
        assert_eq!(p.provenance()[0].sigma_at, 2.0);
    }
}
