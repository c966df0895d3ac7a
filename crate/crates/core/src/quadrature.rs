//! Fixed Gauss–Legendre rules.

/// 8-point nodes on `[-1, 1]` (positive half; the rule is symmetric).
const GL8_X: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL8_W: [f64; 4] = [
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// `(node, weight)` pairs of the 8-point rule mapped to `[0, 1]`.
pub fn gl8_unit() -> [(f64, f64); 8] {
    let mut out = [(0.0, 0.0); 8];
    for (j, (x, w)) in GL8_X.iter().zip(GL8_W).enumerate() {
        out[2 * j] = (0.5 - 0.5 * x, 0.5 * w);
        out[2 * j + 1] = (0.5 + 0.5 * x, 0.5 * w);
    }
    out
}

/// `int_lo^hi f` with one 8-point panel; exact for polynomials of degree 15.
#[inline]
pub fn gl8(lo: f64, hi: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let mut acc = 0.0;
    for (x, w) in GL8_X.iter().zip(GL8_W) {
        acc += w * (f(c - h * x) + f(c + h * x));
    }
    acc * h
}

/// `gl8` applied on `panels` equal sub-intervals.
pub fn gl8_composite(lo: f64, hi: f64, panels: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let panels = panels.max(1);
    let step = (hi - lo) / panels as f64;
    (0..panels)
        .map(|j| {
            let l = lo + j as f64 * step;
            let r = if j + 1 == panels { hi } else { l + step };
            gl8(l, r, &mut f)
        })
        .sum()
}

/// `gl8_composite` with panels no longer than half the distance from the
/// interval to `pole`, so a simple pole of the integrand outside `[lo, hi]`
/// costs no accuracy.
pub fn gl8_avoiding(lo: f64, hi: f64, pole: Option<f64>, f: impl FnMut(f64) -> f64) -> f64 {
    let panels = match pole {
        Some(p) if p.is_finite() => {
            let dist = (lo - p).abs().min((hi - p).abs());
            ((hi - lo).abs() / (0.5 * dist)).ceil().clamp(1.0, 1e6) as usize
        }
        _ => 1,
    };
    gl8_composite(lo, hi, panels, f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_degree_fifteen() {
        let v = gl8(-1.0, 2.0, |x| x.powi(15));
        let exact = (2f64.powi(16) - 1.0) / 16.0;
        assert!((v - exact).abs() < 1e-10 * exact);
        assert!((gl8(0.0, 1.0, |_| 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn composite_rational() {
        let v = gl8_composite(0.0, 1.0, 4, |x| 1.0 / (1.0 + x));
        assert!((v - 2f64.ln()).abs() < 1e-14);
        let v = gl8_avoiding(0.0, 1.0, Some(-0.01), |x| 1.0 / (0.01 + x).powi(2));
        assert!((v - (100.0 - 1.0 / 1.01)).abs() < 1e-9);
    }
}
