//! JSON experiment configuration.
//!
//! Parsing reports the field path of any schema violation; building the
//! model wraps coefficient bound failures as model errors.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coefficients::{PiecewiseFunction, SdeModel, Segment};
use crate::error::{LdpError, Result};
use crate::path::GridPath;
use crate::pathopt::{EventSpec, MinimizeOptions};
use crate::simulate::Sampler;

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub model: ModelConfig,
    #[serde(default)]
    pub experiment: Option<ExperimentConfig>,
    #[serde(default)]
    pub optimize: OptimizeConfig,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default)]
    pub breakpoints: Vec<f64>,
    pub a: FunctionConfig,
    pub sigma: FunctionConfig,
    pub x0: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(default)]
    pub clamp_radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionConfig {
    pub segments: Vec<SegmentConfig>,
    #[serde(default)]
    pub at_breakpoints: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Constant,
    Affine,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentConfig {
    pub kind: SegmentKind,
    pub c0: f64,
    #[serde(default)]
    pub c1: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub epsilons: Vec<f64>,
    pub n_paths: usize,
    pub h: f64,
    pub event: EventConfig,
    #[serde(default)]
    pub tilt: TiltConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub extrapolation: Extrapolation,
    #[serde(default = "default_sampler")]
    pub sampler: Sampler,
}

fn default_sampler() -> Sampler {
    Sampler::EulerMaruyama
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EventConfig {
    FixedEndpoint {
        b: f64,
    },
    /// `null` or a missing bound means unbounded on that side.
    TerminalInterval {
        #[serde(default)]
        lower: Option<f64>,
        #[serde(default)]
        upper: Option<f64>,
    },
    /// Reference node values on a uniform grid over `[0, T]`.
    SupBall {
        reference: Vec<f64>,
        delta: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TiltConfig {
    /// Allow tilting on rungs where plain sampling expects fewer than 100 hits.
    #[serde(default = "yes")]
    pub enabled: bool,
    /// Bound on the drift shift.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Tilt every rung regardless of the expected hit count.
    #[serde(default)]
    pub always: bool,
}

fn yes() -> bool {
    true
}

fn default_gamma() -> f64 {
    0.5
}

impl Default for TiltConfig {
    fn default() -> Self {
        TiltConfig {
            enabled: true,
            gamma: default_gamma(),
            always: false,
        }
    }
}

/// How `eps^2 log p_hat` is extrapolated to `eps = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Extrapolation {
    /// Least-squares line in `eps`.
    AffineInEps,
    /// Least-squares line in `eps^2`.
    #[default]
    AffineInEpsSquared,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
}

fn default_n() -> usize {
    MinimizeOptions::default().n
}

fn default_restarts() -> usize {
    MinimizeOptions::default().restarts
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        OptimizeConfig {
            n: default_n(),
            restarts: default_restarts(),
        }
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            LdpError::config(
                if path == "." { String::new() } else { path },
                e.into_inner().to_string(),
            )
        })
    }

    pub fn load(file: impl AsRef<Path>) -> Result<Self> {
        let file = file.as_ref();
        let text = std::fs::read_to_string(file)
            .map_err(|e| LdpError::Io(format!("{}: {e}", file.display())))?;
        Self::from_json(&text)
    }

    pub fn sde_model(&self) -> Result<SdeModel> {
        self.model.build()
    }

    pub fn experiment(&self) -> Result<&ExperimentConfig> {
        self.experiment
            .as_ref()
            .ok_or_else(|| LdpError::config("experiment", "section is required for this command"))
    }

    pub fn event(&self) -> Result<EventSpec> {
        let exp = self.experiment()?;
        exp.event.build(self.model.horizon)
    }

    pub fn minimize_options(&self, seed: u64) -> MinimizeOptions {
        MinimizeOptions {
            n: self.optimize.n,
            restarts: self.optimize.restarts,
            seed,
            ..MinimizeOptions::default()
        }
    }
}

impl SegmentConfig {
    fn build(&self, path: &str) -> Result<Segment> {
        match self.kind {
            SegmentKind::Constant if self.c1 != 0.0 => Err(LdpError::config(
                format!("{path}.c1"),
                "constant segment must not have a slope",
            )),
            SegmentKind::Constant => Ok(Segment::Constant(self.c0)),
            SegmentKind::Affine => Ok(Segment::Affine {
                c0: self.c0,
                c1: self.c1,
            }),
        }
    }
}

impl FunctionConfig {
    fn build(
        &self,
        name: &str,
        breakpoints: &[f64],
        clamp: Option<f64>,
    ) -> Result<PiecewiseFunction> {
        if self.segments.len() != breakpoints.len() + 1 {
            return Err(LdpError::config(
                format!("model.{name}.segments"),
                format!(
                    "{} breakpoints need {} segments, got {}",
                    breakpoints.len(),
                    breakpoints.len() + 1,
                    self.segments.len()
                ),
            ));
        }
        let segments = self
            .segments
            .iter()
            .enumerate()
            .map(|(i, s)| s.build(&format!("model.{name}.segments[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        PiecewiseFunction::new(
            breakpoints.to_vec(),
            segments,
            self.at_breakpoints.clone(),
            clamp,
        )
        .map_err(|e| LdpError::config(format!("model.{name}"), e.to_string()))
    }

    pub fn from_function(f: &PiecewiseFunction) -> Self {
        FunctionConfig {
            segments: f
                .segments()
                .iter()
                .map(|s| match *s {
                    Segment::Constant(c) => SegmentConfig {
                        kind: SegmentKind::Constant,
                        c0: c,
                        c1: 0.0,
                    },
                    Segment::Affine { c0, c1 } => SegmentConfig {
                        kind: SegmentKind::Affine,
                        c0,
                        c1,
                    },
                })
                .collect(),
            at_breakpoints: Some(f.at_breakpoints().to_vec()),
        }
    }
}

impl ModelConfig {
    pub fn build(&self) -> Result<SdeModel> {
        let a = self.a.build("a", &self.breakpoints, self.clamp_radius)?;
        let sigma = self
            .sigma
            .build("sigma", &self.breakpoints, self.clamp_radius)?;
        SdeModel::new(a, sigma, self.x0, self.horizon).map_err(|e| match e {
            LdpError::InvalidArgument(m) => LdpError::config("model", m),
            other => LdpError::Model(Box::new(other)),
        })
    }

    /// Config for an existing model (no clamp; breakpoints already merged).
    pub fn from_model(model: &SdeModel) -> Self {
        ModelConfig {
            breakpoints: model.drift().breakpoints().to_vec(),
            a: FunctionConfig::from_function(model.drift()),
            sigma: FunctionConfig::from_function(model.diffusion()),
            x0: model.x0(),
            horizon: model.horizon(),
            clamp_radius: None,
        }
    }
}

impl EventConfig {
    pub fn build(&self, horizon: f64) -> Result<EventSpec> {
        let event = match self {
            EventConfig::FixedEndpoint { b } => EventSpec::FixedEndpoint(*b),
            EventConfig::TerminalInterval { lower, upper } => EventSpec::TerminalInterval {
                lower: lower.unwrap_or(f64::NEG_INFINITY),
                upper: upper.unwrap_or(f64::INFINITY),
            },
            EventConfig::SupBall { reference, delta } => EventSpec::SupBall {
                reference: GridPath::new(horizon, reference.clone())
                    .map_err(|e| LdpError::config("experiment.event.reference", e.to_string()))?,
                delta: *delta,
            },
        };
        event
            .validate()
            .map_err(|e| LdpError::config("experiment.event", e.to_string()))?;
        Ok(event)
    }
}
