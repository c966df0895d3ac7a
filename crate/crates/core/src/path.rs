//! Paths on a uniform time grid.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{LdpError, Result};

/// Values `f_0, ..., f_n` at times `t_k = k T / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    horizon: f64,
    values: Vec<f64>,
}

impl GridPath {
    pub fn new(horizon: f64, values: Vec<f64>) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(LdpError::InvalidPath(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if values.len() < 2 {
            return Err(LdpError::InvalidPath(
                "a path needs at least one step".into(),
            ));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(LdpError::InvalidPath(format!(
                "non-finite value at node {k}"
            )));
        }
        Ok(GridPath { horizon, values })
    }

    pub fn from_fn(horizon: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let dt = horizon / n as f64;
        Self::new(horizon, (0..=n).map(|k| f(k as f64 * dt)).collect())
    }

    pub fn constant(horizon: f64, n: usize, x: f64) -> Result<Self> {
        Self::new(horizon, vec![x; n + 1])
    }

    pub fn linear(horizon: f64, n: usize, from: f64, to: f64) -> Result<Self> {
        Self::new(
            horizon,
            (0..=n)
                .map(|k| from + (to - from) * k as f64 / n as f64)
                .collect(),
        )
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of steps.
    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n() as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.n() {
            self.horizon
        } else {
            k as f64 * self.dt()
        }
    }

    pub fn start(&self) -> f64 {
        self.values[0]
    }

    pub fn end(&self) -> f64 {
        self.values[self.n()]
    }

    /// Slope on cell `k`.
    pub fn velocity(&self, k: usize) -> f64 {
        (self.values[k + 1] - self.values[k]) / self.dt()
    }

    /// Linear interpolation; `t` is clamped into `[0, T]`.
    pub fn interp(&self, t: f64) -> f64 {
        let n = self.n();
        let s = (t / self.horizon).clamp(0.0, 1.0) * n as f64;
        let k = (s.floor() as usize).min(n - 1);
        let w = s - k as f64;
        self.values[k] + w * (self.values[k + 1] - self.values[k])
    }

    /// Uniform resampling of the interpolant on `[0, t_end]` with `n` steps.
    pub fn restrict(&self, t_end: f64, n: usize) -> Result<Self> {
        Self::from_fn(t_end, n, |t| self.interp(t))
    }

    /// Largest node-wise distance; grids must match.
    pub fn sup_distance(&self, other: &GridPath) -> Result<f64> {
        if self.n() != other.n() {
            return Err(LdpError::InvalidPath(format!(
                "grid sizes differ: {} vs {}",
                self.n(),
                other.n()
            )));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Two-column CSV `t,f` with header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "f"])?;
        for (k, v) in self.values.iter().enumerate() {
            w.write_record([format!("{}", self.time(k)), format!("{v}")])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads `t,f` CSV; times must start at 0 and be uniform.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "f" {
            return Err(LdpError::InvalidPath("expected header `t,f`".into()));
        }
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec[i]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| LdpError::InvalidPath(format!("row {}: {e}", line + 1)))
            };
            times.push(parse(0)?);
            values.push(parse(1)?);
        }
        if times.len() < 2 {
            return Err(LdpError::InvalidPath(
                "a path needs at least two rows".into(),
            ));
        }
        let n = times.len() - 1;
        let horizon = times[n];
        if times[0] != 0.0 {
            return Err(LdpError::InvalidPath("first time must be 0".into()));
        }
        let dt = horizon / n as f64;
        let tol = 1e-9 * horizon.abs().max(1.0);
        for (k, &t) in times.iter().enumerate() {
            if (t - k as f64 * dt).abs() > tol {
                return Err(LdpError::InvalidPath(format!(
                    "non-uniform grid at row {}: t = {t}, expected {}",
                    k + 1,
                    k as f64 * dt
                )));
            }
        }
        Self::new(horizon, values)
    }

    pub fn save(&self, file: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(file)?)
    }

    pub fn load(file: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(file)?)
    }
}
