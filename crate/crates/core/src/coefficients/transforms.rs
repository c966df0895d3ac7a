//! Closed-form antiderivatives `S = int a_bar/sigma_bar^2` and `Sigma = int 1/sigma_bar`.

use super::modified::ModifiedPair;
use super::piecewise::Segment;

/// `int_lo^hi (p0 + p1 x) / (q0 + q1 x)^2 dx` for a denominator without zeros on `[lo, hi]`.
pub(crate) fn ratio_integral(num: Segment, den: Segment, lo: f64, hi: f64) -> f64 {
    let d = hi - lo;
    if d == 0.0 {
        return 0.0;
    }
    let (p0, p1) = (num.intercept(), num.slope());
    let (q0, q1) = (den.intercept(), den.slope());
    if q1 == 0.0 {
        return d * (p0 + p1 * 0.5 * (lo + hi)) / (q0 * q0);
    }
    // p0 + p1 x = A + B u with u = q0 + q1 x
    let b = p1 / q1;
    let a = p0 - b * q0;
    let u_lo = q0 + q1 * lo;
    let u_hi = q0 + q1 * hi;
    a * d / (u_lo * u_hi) + b * reciprocal_integral(den, lo, hi)
}

/// `int_lo^hi 1 / (q0 + q1 x) dx` for a denominator without zeros on `[lo, hi]`.
pub(crate) fn reciprocal_integral(den: Segment, lo: f64, hi: f64) -> f64 {
    let d = hi - lo;
    let (q0, q1) = (den.intercept(), den.slope());
    if q1 == 0.0 {
        return d / q0;
    }
    let u_lo = q0 + q1 * lo;
    (q1 * d / u_lo).ln_1p() / q1
}

fn integrate_pieces(
    pair: &ModifiedPair,
    x: f64,
    piece: impl Fn(Segment, Segment, f64, f64) -> f64,
) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let (lo, hi, sign) = if x > 0.0 {
        (0.0, x, 1.0)
    } else {
        (x, 0.0, -1.0)
    };
    let a = pair.a_bar();
    let s = pair.sigma_bar();
    let mut total = 0.0;
    for i in a.segment_index(lo)..a.segments().len() {
        let (l, r) = a.segment_bounds(i);
        if l >= hi {
            break;
        }
        let l = l.max(lo);
        let r = r.min(hi);
        if r > l {
            total += piece(a.segments()[i], s.segments()[i], l, r);
        }
    }
    sign * total
}

pub fn s_transform(pair: &ModifiedPair, x: f64) -> f64 {
    integrate_pieces(pair, x, ratio_integral)
}

pub fn sigma_transform(pair: &ModifiedPair, x: f64) -> f64 {
    integrate_pieces(pair, x, |_, s, l, r| reciprocal_integral(s, l, r))
}
