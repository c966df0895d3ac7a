//! Monte Carlo estimation of event probabilities along an epsilon ladder,
//! compared against the minimal action of the same event.

pub mod config;
pub mod run;

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::coefficients::{modify, ModifiedPair, SdeModel};
use crate::error::{LdpError, Result};
use crate::pathopt::{minimize_action, EventSpec, MinimizeOptions, MinimizeResult};
use crate::simulate::{
    check_piecewise_constant, em_kernel, patchwork_kernel, Sampler, SimConfig, TiltSpec,
};
use crate::stats::{normal_interval, wilson_interval, BLOCK, Z95};

pub use config::{Config, Extrapolation};

/// Probability estimate at one noise level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEstimate {
    pub eps: f64,
    pub n: u64,
    pub hits: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `eps^2 log p_hat`; `None` when there are no hits.
    pub scaled_log: Option<f64>,
    pub zero_hits: bool,
    /// Standard error of `p_hat`.
    pub std_error: f64,
    /// Estimated under a Girsanov tilt (normal interval) rather than plainly (Wilson interval).
    pub tilted: bool,
}

/// Node-wise membership test, prepared for one simulation grid.
enum Membership {
    Terminal { lower: f64, upper: f64 },
    Tube { reference: Vec<f64>, delta: f64 },
}

impl Membership {
    fn new(event: &EventSpec, cfg: &SimConfig) -> Result<Self> {
        event.validate()?;
        Ok(match event {
            EventSpec::FixedEndpoint(_) => {
                return Err(LdpError::InvalidEvent(
                    "a fixed endpoint has probability zero; use terminal_interval or sup_ball"
                        .into(),
                ))
            }
            EventSpec::TerminalInterval { lower, upper } => Membership::Terminal {
                lower: *lower,
                upper: *upper,
            },
            EventSpec::SupBall { reference, delta } => {
                let n = cfg.n_steps();
                let horizon = cfg.model.horizon();
                let reference = (0..=n)
                    .map(|k| {
                        reference.interp(if k == n {
                            horizon
                        } else {
                            horizon * k as f64 / n as f64
                        })
                    })
                    .collect::<Vec<_>>();
                Membership::Tube {
                    reference,
                    delta: *delta,
                }
            }
        })
    }

    /// Runs one path through `kernel` and reports membership.
    fn sample(
        &self,
        x0: f64,
        kernel: impl FnOnce(&mut dyn FnMut(usize, f64) -> bool) -> f64,
    ) -> bool {
        match self {
            Membership::Terminal { lower, upper } => {
                let end = kernel(&mut |_, _| true);
                *lower <= end && end <= *upper
            }
            Membership::Tube { reference, delta } => {
                if (x0 - reference[0]).abs() > *delta {
                    return false;
                }
                let mut inside = true;
                kernel(&mut |k, x| {
                    inside = (x - reference[k]).abs() <= *delta;
                    inside
                });
                inside
            }
        }
    }
}

fn pairwise3(v: &[(u64, f64, f64)]) -> (u64, f64, f64) {
    match v.len() {
        0 => (0, 0.0, 0.0),
        1 => v[0],
        n => {
            let (a, b) = (pairwise3(&v[..n / 2]), pairwise3(&v[n / 2..]));
            (a.0 + b.0, a.1 + b.1, a.2 + b.2)
        }
    }
}

/// Fraction of paths in `event` (weighted under `tilt`), using the
/// Euler–Maruyama sampler.
pub fn estimate_event(
    cfg: &SimConfig,
    event: &EventSpec,
    tilt: Option<&TiltSpec>,
) -> Result<McEstimate> {
    estimate_event_with(cfg, event, tilt, Sampler::EulerMaruyama)
}

/// [`estimate_event`] with a choice of sampler; tilting needs Euler–Maruyama.
pub fn estimate_event_with(
    cfg: &SimConfig,
    event: &EventSpec,
    tilt: Option<&TiltSpec>,
    sampler: Sampler,
) -> Result<McEstimate> {
    cfg.validate()?;
    if cfg.n_paths == 0 {
        return Err(LdpError::InvalidArgument("n_paths must be >= 1".into()));
    }
    let tilt = tilt.filter(|t| !t.is_zero());
    if tilt.is_some() {
        if cfg.epsilon == 0.0 {
            return Err(LdpError::InvalidArgument(
                "tilted sampling needs epsilon > 0".into(),
            ));
        }
        if sampler != Sampler::EulerMaruyama {
            return Err(LdpError::InvalidArgument(
                "tilted sampling uses the Euler–Maruyama sampler".into(),
            ));
        }
    }
    if sampler == Sampler::Patchwork {
        check_piecewise_constant(&cfg.model)?;
    }
    let membership = Membership::new(event, cfg)?;
    let n = cfg.n_paths as u64;
    let x0 = cfg.model.x0();
    let blocks: Vec<(u64, f64, f64)> = (0..n.div_ceil(BLOCK as u64))
        .into_par_iter()
        .map(|b| {
            let (mut hits, mut sw, mut sw2) = (0u64, 0.0, 0.0);
            for i in b * BLOCK as u64..((b + 1) * BLOCK as u64).min(n) {
                let mut lw = 0.0;
                let inside = membership.sample(x0, |visit| match sampler {
                    Sampler::EulerMaruyama => {
                        let (x, w) = em_kernel(cfg, i, tilt, None, visit);
                        lw = w;
                        x
                    }
                    Sampler::Patchwork => patchwork_kernel(cfg, i, visit),
                });
                if inside {
                    hits += 1;
                    let w = lw.exp();
                    sw += w;
                    sw2 += w * w;
                }
            }
            (hits, sw, sw2)
        })
        .collect();
    let (hits, sw, sw2) = pairwise3(&blocks);
    let nf = n as f64;
    let (p_hat, std_error, (ci_low, ci_high)) = if tilt.is_some() {
        let mean = sw / nf;
        let var = if n > 1 {
            ((sw2 / nf - mean * mean) * nf / (nf - 1.0)).max(0.0)
        } else {
            0.0
        };
        let se = (var / nf).sqrt();
        let p = mean.min(1.0);
        (p, se, normal_interval(p, se, Z95))
    } else {
        let p = hits as f64 / nf;
        (
            p,
            (p * (1.0 - p) / nf).sqrt(),
            wilson_interval(hits, n, Z95),
        )
    };
    let eps = cfg.epsilon;
    Ok(McEstimate {
        eps,
        n,
        hits,
        p_hat,
        ci_low,
        ci_high,
        scaled_log: (hits > 0 && p_hat > 0.0).then(|| eps * eps * p_hat.ln()),
        zero_hits: hits == 0,
        std_error,
        tilted: tilt.is_some(),
    })
}

/// When and how rungs are tilted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TiltPolicy {
    pub enabled: bool,
    /// Tilt every rung, not only those expecting fewer than [`TiltPolicy::MIN_EXPECTED_HITS`] hits.
    pub always: bool,
    pub gamma: f64,
    /// State bins of the step-function tilt.
    pub bins: usize,
}

impl TiltPolicy {
    pub const MIN_EXPECTED_HITS: f64 = 100.0;

    pub fn disabled() -> Self {
        TiltPolicy {
            enabled: false,
            ..Self::default()
        }
    }
}

impl Default for TiltPolicy {
    fn default() -> Self {
        TiltPolicy {
            enabled: true,
            always: false,
            gamma: 0.5,
            bins: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdpOptions {
    /// Strictly decreasing, at least three entries.
    pub epsilons: Vec<f64>,
    pub n_paths: usize,
    pub h: f64,
    pub seed: u64,
    pub tilt: TiltPolicy,
    pub extrapolation: Extrapolation,
    pub optimize: MinimizeOptions,
    /// Also minimize with the unmodified (right-limit) coefficients for comparison.
    pub compare_unmodified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TiltSummary {
    pub gamma: f64,
    pub sup_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LdpReport {
    pub estimates: Vec<McEstimate>,
    /// Indices of rungs without hits, left out of the fit.
    pub flagged_rungs: Vec<usize>,
    /// Minimal action of the event under the modified coefficients.
    pub rate_target: f64,
    /// Minimal action under the raw right-limit coefficients.
    pub unmodified_rate_target: Option<f64>,
    pub extrapolation: Extrapolation,
    /// Fitted `eps^2 log p` at `eps = 0`; `None` with fewer than two usable rungs.
    pub extrapolated: Option<f64>,
    /// `extrapolated - (-rate_target)`.
    pub gap: Option<f64>,
    pub tilt: Option<TiltSummary>,
    pub minimize: MinimizeResult,
    pub warnings: Vec<String>,
}

impl LdpReport {
    /// Refits the extrapolation and gap from the per-rung estimates.
    pub fn recompute(&mut self) {
        self.flagged_rungs = self
            .estimates
            .iter()
            .enumerate()
            .filter(|(_, e)| e.scaled_log.is_none())
            .map(|(i, _)| i)
            .collect();
        self.extrapolated = extrapolate(&self.estimates, self.extrapolation);
        self.gap = self.extrapolated.map(|x| x + self.rate_target);
    }

    /// Per-rung CSV: `eps,n,hits,p_hat,ci_low,ci_high,scaled_log` (empty `scaled_log` without hits).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_estimates_csv(out, &self.estimates)
    }
}

pub fn write_estimates_csv<W: Write>(out: W, estimates: &[McEstimate]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "eps",
        "n",
        "hits",
        "p_hat",
        "ci_low",
        "ci_high",
        "scaled_log",
    ])?;
    for e in estimates {
        w.write_record([
            e.eps.to_string(),
            e.n.to_string(),
            e.hits.to_string(),
            e.p_hat.to_string(),
            e.ci_low.to_string(),
            e.ci_high.to_string(),
            e.scaled_log.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Least-squares extrapolation of `scaled_log` to `eps = 0` over rungs with hits.
pub fn extrapolate(estimates: &[McEstimate], method: Extrapolation) -> Option<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = estimates
        .iter()
        .filter_map(|e| {
            let s = e.scaled_log?;
            let x = match method {
                Extrapolation::AffineInEps => e.eps,
                Extrapolation::AffineInEpsSquared => e.eps * e.eps,
            };
            Some((x, s))
        })
        .unzip();
    crate::stats::affine_fit(&x, &y).map(|(c0, _)| c0)
}

fn validate_ladder(eps: &[f64]) -> Result<()> {
    if eps.len() < 3 {
        return Err(LdpError::InvalidArgument(format!(
            "epsilon ladder needs at least 3 entries, got {}",
            eps.len()
        )));
    }
    if eps.iter().any(|e| !(e.is_finite() && *e > 0.0)) || eps.windows(2).any(|w| w[0] <= w[1]) {
        return Err(LdpError::InvalidArgument(
            "epsilon ladder must be positive and strictly decreasing".into(),
        ));
    }
    Ok(())
}

/// Estimates the event along the ladder and compares the extrapolated
/// `eps^2 log p` with minus the minimal action.
pub fn ldp_curve(model: &SdeModel, event: &EventSpec, opts: &LdpOptions) -> Result<LdpReport> {
    validate_ladder(&opts.epsilons)?;
    event.validate()?;
    let pair = modify(model.drift(), model.diffusion());
    let minimize = minimize_action(model, &pair, event, &opts.optimize)?;
    let rate = minimize.value;
    let unmodified_rate_target = if opts.compare_unmodified {
        let raw = ModifiedPair::raw(model.drift(), model.diffusion());
        Some(minimize_action(model, &raw, event, &opts.optimize)?.value)
    } else {
        None
    };
    let mut warnings = Vec::new();
    let policy = opts.tilt;
    let mut tilt_spec = None;
    let base = SimConfig::new(
        model.clone(),
        opts.epsilons[0],
        opts.h,
        opts.n_paths,
        opts.seed,
    )?;
    let mut estimates = Vec::with_capacity(opts.epsilons.len());
    for &eps in &opts.epsilons {
        let cfg = base.with_epsilon(eps);
        let expected = opts.n_paths as f64 * (-rate / (eps * eps)).exp();
        let use_tilt =
            policy.enabled && (policy.always || expected < TiltPolicy::MIN_EXPECTED_HITS);
        if use_tilt && tilt_spec.is_none() {
            tilt_spec = Some(TiltSpec::from_minimizer(
                &pair,
                &minimize.argmin,
                policy.gamma,
                policy.bins,
            )?);
            if 0.5 * policy.gamma * policy.gamma > 0.1 * rate {
                warnings.push(format!(
                    "tilt bound gamma = {} perturbs the rate by up to {:.3}, more than 10% of the target {:.3}",
                    policy.gamma,
                    0.5 * policy.gamma * policy.gamma,
                    rate
                ));
            }
        }
        let tilt = if use_tilt { tilt_spec.as_ref() } else { None };
        estimates.push(estimate_event(&cfg, event, tilt)?);
    }
    let mut report = LdpReport {
        estimates,
        flagged_rungs: Vec::new(),
        rate_target: rate,
        unmodified_rate_target,
        extrapolation: opts.extrapolation,
        extrapolated: None,
        gap: None,
        tilt: tilt_spec.map(|t| TiltSummary {
            gamma: t.gamma,
            sup_norm: t.sup_norm,
        }),
        minimize,
        warnings,
    };
    report.recompute();
    if !report.flagged_rungs.is_empty() {
        report.warnings.push(format!(
            "rungs {:?} had no hits and were left out of the fit",
            report.flagged_rungs
        ));
    }
    if report.extrapolated.is_none() {
        report
            .warnings
            .push("fewer than two usable rungs; no extrapolation".into());
    }
    Ok(report)
}
