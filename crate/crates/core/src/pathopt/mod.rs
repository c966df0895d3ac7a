//! Minimization of the discretized rate functional over grid paths subject
//! to an event constraint, and zero-energy trajectories.
//!
//! Each start runs a smoothing continuation (coefficients box-averaged over
//! a shrinking radius, projected L-BFGS per stage), then alternates exact
//! L-BFGS with coordinate descent whose candidates include breakpoints and
//! neighbour values, so that stationary cells on sticky points are reachable.

mod lbfgs;
mod objective;
mod zero_energy;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::action::rate_functional;
use crate::coefficients::{ModifiedPair, SdeModel};
use crate::error::{LdpError, Result};
use crate::path::GridPath;
use lbfgs::{LbfgsOptions, LbfgsReport};
use objective::Problem;

pub use zero_energy::{zero_energy_detailed, zero_energy_trajectory, ZeroEnergyTrajectory};

/// Target set for the minimizer and the Monte Carlo estimator.
#[derive(Debug, Clone, PartialEq)]
pub enum EventSpec {
    /// `f_T = b`.
    FixedEndpoint(f64),
    /// `f_T in [lower, upper]`; either bound may be infinite.
    TerminalInterval { lower: f64, upper: f64 },
    /// `|f_t - reference_t| <= delta` at every grid node.
    SupBall { reference: GridPath, delta: f64 },
}

impl EventSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            EventSpec::FixedEndpoint(_) => "fixed_endpoint",
            EventSpec::TerminalInterval { .. } => "terminal_interval",
            EventSpec::SupBall { .. } => "sup_ball",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EventSpec::FixedEndpoint(b) if !b.is_finite() => Err(LdpError::InvalidEvent(format!(
                "endpoint must be finite, got {b}"
            ))),
            EventSpec::TerminalInterval { lower, upper }
                if lower.is_nan() || upper.is_nan() || lower > upper =>
            {
                Err(LdpError::InvalidEvent(format!(
                    "empty interval [{lower}, {upper}]"
                )))
            }
            EventSpec::SupBall { delta, .. } if !(delta.is_finite() && *delta > 0.0) => Err(
                LdpError::InvalidEvent(format!("ball radius must be positive, got {delta}")),
            ),
            _ => Ok(()),
        }
    }

    /// Membership of a path given by its node values on a uniform grid over `[0, horizon]`.
    pub fn contains(&self, horizon: f64, values: &[f64]) -> bool {
        let end = *values.last().expect("non-empty path");
        match self {
            EventSpec::FixedEndpoint(b) => end == *b,
            EventSpec::TerminalInterval { lower, upper } => *lower <= end && end <= *upper,
            EventSpec::SupBall { reference, delta } => {
                let n = values.len() - 1;
                values.iter().enumerate().all(|(k, &x)| {
                    let t = if k == n {
                        horizon
                    } else {
                        horizon * k as f64 / n as f64
                    };
                    (x - reference.interp(t)).abs() <= *delta
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeOptions {
    /// Number of grid steps.
    pub n: usize,
    /// Number of starting profiles.
    pub restarts: usize,
    pub seed: u64,
    /// Smoothing radii, largest first.
    pub smoothing: Vec<f64>,
    pub polish_rounds: usize,
    /// Projected-gradient tolerance for the `converged` flag.
    pub grad_tol: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            n: 64,
            restarts: 8,
            seed: 0,
            smoothing: vec![0.1, 0.03, 0.01, 0.003],
            polish_rounds: 5,
            grad_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimizeResult {
    #[serde(skip)]
    pub argmin: GridPath,
    pub value: f64,
    /// `(rho, exact action of the stage iterate)`; the final entry has `rho = 0`.
    pub smoothing_trace: Vec<(f64, f64)>,
    pub restarts_used: usize,
    pub converged: bool,
    pub grad_norm: f64,
    /// Index of the start that produced the argmin.
    pub best_start: usize,
}

struct StartOutcome {
    nodes: Vec<f64>,
    value: f64,
    trace: Vec<(f64, f64)>,
    pg_norm: f64,
}

/// Minimizes the rate functional of `pair` over grid paths from `model.x0()`
/// on `[0, model.horizon()]` that satisfy `event`.
pub fn minimize_action(
    model: &SdeModel,
    pair: &ModifiedPair,
    event: &EventSpec,
    opts: &MinimizeOptions,
) -> Result<MinimizeResult> {
    event.validate()?;
    if opts.n < 2 {
        return Err(LdpError::InvalidArgument(format!(
            "minimization needs n >= 2, got {}",
            opts.n
        )));
    }
    let n = opts.n;
    let horizon = model.horizon();
    let x0 = model.x0();
    let dt = horizon / n as f64;
    let t = |k: usize| if k == n { horizon } else { k as f64 * dt };

    let mut lower = vec![f64::NEG_INFINITY; n];
    let mut upper = vec![f64::INFINITY; n];
    let mut pinned_end = None;
    match event {
        EventSpec::FixedEndpoint(b) => pinned_end = Some(*b),
        EventSpec::TerminalInterval { lower: l, upper: u } => {
            lower[n - 1] = *l;
            upper[n - 1] = *u;
        }
        EventSpec::SupBall { reference, delta } => {
            if (x0 - reference.interp(0.0)).abs() > *delta {
                return Err(LdpError::InvalidEvent(format!(
                    "start {x0} lies outside the ball around {}",
                    reference.interp(0.0)
                )));
            }
            for k in 1..=n {
                let r = reference.interp(t(k));
                lower[k - 1] = r - delta;
                upper[k - 1] = r + delta;
            }
        }
    }
    if pinned_end.is_some() {
        lower.pop();
        upper.pop();
    }
    let problem = Problem {
        pair,
        x0,
        n,
        dt,
        pinned_end,
        lower,
        upper,
    };

    let starts = starting_profiles(&problem, event, horizon, opts)?;
    let outcomes: Vec<StartOutcome> = starts
        .par_iter()
        .map(|s| run_start(&problem, s, opts))
        .collect();
    let (best_start, best) = outcomes
        .iter()
        .enumerate()
        .fold(None::<(usize, &StartOutcome)>, |acc, (i, o)| match acc {
            Some((_, b)) if b.value <= o.value || o.value.is_nan() => acc,
            _ => Some((i, o)),
        })
        .expect("at least one start");
    let argmin = GridPath::new(horizon, best.nodes.clone())?;
    let value = rate_functional(pair, &argmin, x0).total;
    Ok(MinimizeResult {
        argmin,
        value,
        smoothing_trace: best.trace.clone(),
        restarts_used: outcomes.len(),
        converged: best.pg_norm <= opts.grad_tol,
        grad_norm: best.pg_norm,
        best_start,
    })
}

fn project_nodes(problem: &Problem, nodes: &mut [f64]) {
    for (j, (l, u)) in problem.lower.iter().zip(&problem.upper).enumerate() {
        nodes[j + 1] = nodes[j + 1].clamp(*l, *u);
    }
    nodes[0] = problem.x0;
    if let Some(b) = problem.pinned_end {
        nodes[problem.n] = b;
    }
}

/// Straight line, the zero-energy path, zero-energy-then-dash profiles and
/// seeded sine perturbations of the line, in that order. Restarts keep a
/// prefix, so the cheap deterministic guesses come first.
fn starting_profiles(
    problem: &Problem,
    event: &EventSpec,
    horizon: f64,
    opts: &MinimizeOptions,
) -> Result<Vec<Vec<f64>>> {
    let n = problem.n;
    let x0 = problem.x0;
    let ze = zero_energy_trajectory(problem.pair, x0, horizon, n)?;
    let target = match event {
        EventSpec::FixedEndpoint(b) => *b,
        EventSpec::TerminalInterval { lower, upper } => ze.end().clamp(*lower, *upper),
        EventSpec::SupBall { reference, .. } => reference.interp(horizon),
    };
    let line: Vec<f64> = (0..=n)
        .map(|k| x0 + (target - x0) * k as f64 / n as f64)
        .collect();
    let mut profiles = Vec::new();
    if let EventSpec::SupBall { reference, .. } = event {
        profiles.push(
            (0..=n)
                .map(|k| reference.interp(horizon * k as f64 / n as f64))
                .collect(),
        );
    }
    profiles.push(line.clone());
    profiles.push(ze.values().to_vec());
    for theta in [0.25, 0.5, 0.75, 0.9] {
        let split = ((theta * n as f64).round() as usize).clamp(1, n - 1);
        let from = ze.values()[split];
        let mut p = ze.values().to_vec();
        for (k, v) in p.iter_mut().enumerate().skip(split) {
            *v = from + (target - from) * (k - split) as f64 / (n - split) as f64;
        }
        profiles.push(p);
    }
    let wanted = opts.restarts.max(1);
    let amp = 0.5 * (target - x0).abs().max(1.0);
    let mut index = 0u64;
    while profiles.len() < wanted {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(index);
        index += 1;
        let c: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        profiles.push(
            line.iter()
                .enumerate()
                .map(|(k, v)| {
                    let s = k as f64 / n as f64;
                    v + amp
                        * (1..=3)
                            .map(|m| {
                                c[m - 1] * (m as f64 * std::f64::consts::PI * s).sin() / m as f64
                            })
                            .sum::<f64>()
                })
                .collect(),
        );
    }
    profiles.truncate(wanted);
    for p in profiles.iter_mut() {
        project_nodes(problem, p);
    }
    Ok(profiles)
}

fn run_start(problem: &Problem, start: &[f64], opts: &MinimizeOptions) -> StartOutcome {
    let mut z = problem.free(start);
    let mut best_z = z.clone();
    let mut best = problem.exact(&z);
    let mut trace = Vec::with_capacity(opts.smoothing.len() + 1);
    let stage = LbfgsOptions {
        max_iter: 300,
        pg_tol: 1e-10,
        ..LbfgsOptions::default()
    };
    for &rho in &opts.smoothing {
        lbfgs::minimize(
            |x, g| problem.smoothed_grad(x, rho, g),
            &mut z,
            &problem.lower,
            &problem.upper,
            stage,
        );
        let e = problem.exact(&z);
        trace.push((rho, e));
        if e < best {
            best = e;
            best_z.clone_from(&z);
        }
    }
    let mut z = best_z;
    let mut report = exact_lbfgs(problem, &mut z, false);
    for _ in 0..opts.polish_rounds {
        let before = problem.exact(&z);
        coordinate_sweep(problem, &mut z);
        report = exact_lbfgs(problem, &mut z, true);
        let after = problem.exact(&z);
        if before - after <= 1e-13 * (1.0 + before.abs()) {
            break;
        }
    }
    let value = problem.exact(&z);
    trace.push((0.0, value));
    StartOutcome {
        nodes: problem.nodes(&z),
        value,
        trace,
        pg_norm: report.pg_norm,
    }
}

/// Exact-objective L-BFGS; optionally holds nodes that sit on a breakpoint.
/// The iterate is only replaced if the exact value does not increase.
fn exact_lbfgs(problem: &Problem, z: &mut Vec<f64>, freeze: bool) -> LbfgsReport {
    let bps = problem.pair.breakpoints();
    let mut lo = problem.lower.clone();
    let mut hi = problem.upper.clone();
    if freeze {
        for (j, &v) in z.iter().enumerate() {
            if bps.binary_search_by(|b| b.partial_cmp(&v).unwrap()).is_ok() {
                lo[j] = v;
                hi[j] = v;
            }
        }
    }
    let before = problem.exact(z);
    let mut trial = z.clone();
    let opts = LbfgsOptions {
        max_iter: 500,
        pg_tol: 1e-10,
        ..LbfgsOptions::default()
    };
    let report = lbfgs::minimize(|x, g| problem.exact_grad(x, g), &mut trial, &lo, &hi, opts);
    if problem.exact(&trial) <= before {
        *z = trial;
        report
    } else {
        let mut g = vec![0.0; z.len()];
        problem.exact_grad(z, &mut g);
        LbfgsReport {
            value: before,
            pg_norm: lbfgs::projected_gradient_norm(z, &g, &lo, &hi),
            converged: false,
        }
    }
}

fn golden(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    const R: f64 = 0.618_033_988_749_894_9;
    let mut c = b - R * (b - a);
    let mut d = a + R * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..60 {
        if (b - a).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - R * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + R * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// One Gauss–Seidel pass of exact one-dimensional minimizations.
fn coordinate_sweep(problem: &Problem, z: &mut [f64]) {
    let mut nodes = problem.nodes(z);
    let bps = problem.pair.breakpoints();
    for j in 0..z.len() {
        let i = j + 1;
        let xi = nodes[i];
        let prev = nodes[i - 1];
        let next = (i < problem.n).then(|| nodes[i + 1]);
        let spread = (xi - prev).abs().max(next.map_or(0.0, |x| (x - xi).abs()));
        let r = (2.0 * spread).max(0.05);
        let lo = (xi - r).max(problem.lower[j]);
        let hi = (xi + r).min(problem.upper[j]);
        let mut cands = vec![lo, hi, xi, prev];
        cands.extend(next);
        let first = bps.partition_point(|&b| b < lo);
        cands.extend(bps[first..].iter().take_while(|&&b| b <= hi));
        cands.retain(|c| *c >= lo && *c <= hi);
        cands.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cands.dedup();
        let f = |x: f64| problem.local(&nodes, i, x);
        let mut best_x = xi;
        let mut best_v = f(xi);
        for &c in &cands {
            let v = f(c);
            if v < best_v {
                best_v = v;
                best_x = c;
            }
        }
        for w in cands.windows(2) {
            let (x, v) = golden(f, w[0], w[1]);
            if v < best_v {
                best_v = v;
                best_x = x;
            }
        }
        nodes[i] = best_x;
        z[j] = best_x;
    }
}
