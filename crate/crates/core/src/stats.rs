//! Interval estimates, order-independent sums and Kolmogorov–Smirnov tests.

use statrs::distribution::{ContinuousCDF, Normal};

/// Two-sided 95% standard normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `hits` successes out of `n` trials.
pub fn wilson_interval(hits: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // the exact interval always contains p; guard against rounding at the ends
    (
        (centre - half).max(0.0).min(p),
        (centre + half).min(1.0).max(p),
    )
}

/// Normal interval `mean ± z * se` clipped to `[0, 1]`.
pub fn normal_interval(mean: f64, se: f64, z: f64) -> (f64, f64) {
    (
        (mean - z * se).clamp(0.0, mean.max(0.0)),
        (mean + z * se).clamp(mean.min(1.0), 1.0),
    )
}

/// Paths per reduction block.
pub const BLOCK: usize = 1024;

/// Sum in index order: sequential inside blocks of [`BLOCK`], pairwise across blocks.
/// The result depends only on the input order.
pub fn blocked_sum(values: &[f64]) -> f64 {
    let blocks: Vec<f64> = values.chunks(BLOCK).map(|c| c.iter().sum()).collect();
    pairwise(&blocks)
}

fn pairwise(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n => pairwise(&v[..n / 2]) + pairwise(&v[n / 2..]),
    }
}

/// Asymptotic Kolmogorov tail `P(K > lambda) = 2 sum (-1)^(k-1) exp(-2 k^2 lambda^2)`.
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    let s = n_eff.sqrt();
    kolmogorov_tail((s + 0.12 + 0.11 / s) * d)
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut v = v.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Two-sample Kolmogorov–Smirnov test.
pub fn ks_two_sample(x: &[f64], y: &[f64]) -> KsResult {
    assert!(
        !x.is_empty() && !y.is_empty(),
        "KS test needs non-empty samples"
    );
    let x = sorted(x);
    let y = sorted(y);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let t = x[i].min(y[j]);
        while i < x.len() && x[i] <= t {
            i += 1;
        }
        while j < y.len() && y[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    KsResult {
        statistic: d,
        p_value: ks_p_value(d, n * m / (n + m)),
    }
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF.
pub fn ks_one_sample(x: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    assert!(!x.is_empty(), "KS test needs a non-empty sample");
    let x = sorted(x);
    let n = x.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in x.iter().enumerate() {
        let f = cdf(v);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    KsResult {
        statistic: d,
        p_value: ks_p_value(d, n),
    }
}

/// CDF of `Normal(mean, sd^2)`.
pub fn normal_cdf(mean: f64, sd: f64) -> impl Fn(f64) -> f64 {
    let dist = Normal::new(mean, sd).expect("valid normal parameters");
    move |x| dist.cdf(x)
}

/// Least-squares line `y = c0 + c1 x`; needs two distinct abscissae.
pub fn affine_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len() as f64;
    if x.len() < 2 || x.len() != y.len() {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let c1 = sxy / sxx;
    Some((my - c1 * mx, c1))
}
