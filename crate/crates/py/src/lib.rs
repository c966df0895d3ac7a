//! Python module `ldp`: a thin layer over `ldp_core`. Models and events are
//! passed in the same JSON shapes the CLI config uses; failures raise
//! `ldp.LdpError` whose message is the CLI's JSON error object.

use std::path::PathBuf;

use ldp_core::action::rate_functional;
use ldp_core::coefficients::{modify, ModifiedPair, SdeModel};
use ldp_core::error::LdpError as CoreError;
use ldp_core::harness::config::{Config, EventConfig, ModelConfig};
use ldp_core::harness::run::{error_json, ldp_options, run_experiment, Command, RunOptions};
use ldp_core::harness::{estimate_event, ldp_curve};
use ldp_core::path::GridPath;
use ldp_core::pathopt::{minimize_action, MinimizeOptions};
use ldp_core::simulate::{terminal_values, Sampler, SimConfig, TiltSpec};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

create_exception!(ldp, LdpError, PyValueError);

fn err(e: CoreError) -> PyErr {
    LdpError::new_err(error_json(&e).to_string())
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> PyResult<T> {
    serde_json::from_str(text).map_err(|e| err(CoreError::config(what, e.to_string())))
}

fn sampler(name: &str) -> Result<Sampler, CoreError> {
    match name {
        "euler_maruyama" => Ok(Sampler::EulerMaruyama),
        "patchwork" => Ok(Sampler::Patchwork),
        other => Err(CoreError::InvalidArgument(format!(
            "unknown sampler `{other}`"
        ))),
    }
}

/// An SDE model with its modified coefficients.
#[pyclass(name = "Model", frozen)]
struct PyModel {
    model: SdeModel,
    pair: ModifiedPair,
}

#[pymethods]
impl PyModel {
    /// Builds from a full config JSON or just its `model` section.
    #[new]
    fn new(config_json: &str) -> PyResult<Self> {
        let doc: serde_json::Value = parse_json(config_json, "")?;
        let model = if doc.get("model").is_some() {
            Config::from_json(config_json)
                .and_then(|c| c.sde_model())
                .map_err(err)?
        } else {
            parse_json::<ModelConfig>(config_json, "model")?
                .build()
                .map_err(err)?
        };
        let pair = modify(model.drift(), model.diffusion());
        Ok(PyModel { model, pair })
    }

    #[getter]
    fn x0(&self) -> f64 {
        self.model.x0()
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.model.horizon()
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.pair.breakpoints().to_vec()
    }

    fn a_bar(&self, x: f64) -> f64 {
        self.pair.drift(x)
    }

    fn sigma_bar(&self, x: f64) -> f64 {
        self.pair.diffusion(x)
    }

    fn b_bar(&self, x: f64) -> f64 {
        self.pair.b_bar(x)
    }

    fn s_transform(&self, x: f64) -> f64 {
        self.pair.s_transform(x)
    }

    fn sigma_transform(&self, x: f64) -> f64 {
        self.pair.sigma_transform(x)
    }

    /// Per-breakpoint rule choices as a JSON list.
    fn provenance(&self) -> String {
        serde_json::to_string(self.pair.provenance()).expect("provenance serializes")
    }

    /// `(total, kinetic, boundary, potential)` of the grid path on `[0, horizon]`.
    #[pyo3(signature = (values, horizon=None))]
    fn action(&self, values: Vec<f64>, horizon: Option<f64>) -> PyResult<(f64, f64, f64, f64)> {
        let path = GridPath::new(horizon.unwrap_or(self.model.horizon()), values).map_err(err)?;
        let b = rate_functional(&self.pair, &path, self.model.x0());
        Ok((b.total, b.kinetic, b.boundary, b.potential))
    }

    /// `(value, node values)` of the minimal-action path for the event.
    #[pyo3(signature = (event_json, n=64, restarts=8, seed=0))]
    fn minimize(
        &self,
        py: Python<'_>,
        event_json: &str,
        n: usize,
        restarts: usize,
        seed: u64,
    ) -> PyResult<(f64, Vec<f64>)> {
        let event = parse_json::<EventConfig>(event_json, "event")?
            .build(self.model.horizon())
            .map_err(err)?;
        let opts = MinimizeOptions {
            n,
            restarts,
            seed,
            ..MinimizeOptions::default()
        };
        let res = py
            .detach(|| minimize_action(&self.model, &self.pair, &event, &opts))
            .map_err(err)?;
        Ok((res.value, res.argmin.into_values()))
    }

    /// `X_T` of paths `0 .. n_paths`.
    #[pyo3(signature = (eps, h, n_paths, seed=0, sampler="euler_maruyama"))]
    fn terminal_values(
        &self,
        py: Python<'_>,
        eps: f64,
        h: f64,
        n_paths: usize,
        seed: u64,
        sampler: &str,
    ) -> PyResult<Vec<f64>> {
        let s = self::sampler(sampler).map_err(err)?;
        let cfg = SimConfig::new(self.model.clone(), eps, h, n_paths, seed).map_err(err)?;
        py.detach(|| terminal_values(&cfg, s)).map_err(err)
    }

    /// `(p_hat, ci_low, ci_high, hits, n)`; `tilt` is an optional constant drift shift.
    #[pyo3(signature = (event_json, eps, h, n_paths, seed=0, tilt=None))]
    #[allow(clippy::too_many_arguments)]
    fn estimate(
        &self,
        py: Python<'_>,
        event_json: &str,
        eps: f64,
        h: f64,
        n_paths: usize,
        seed: u64,
        tilt: Option<f64>,
    ) -> PyResult<(f64, f64, f64, u64, u64)> {
        let event = parse_json::<EventConfig>(event_json, "event")?
            .build(self.model.horizon())
            .map_err(err)?;
        let cfg = SimConfig::new(self.model.clone(), eps, h, n_paths, seed).map_err(err)?;
        let tilt = tilt.map(TiltSpec::constant);
        let e = py
            .detach(|| estimate_event(&cfg, &event, tilt.as_ref()))
            .map_err(err)?;
        Ok((e.p_hat, e.ci_low, e.ci_high, e.hits, e.n))
    }
}

/// Runs the full ladder of a config and returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (config_json, seed=None))]
fn verify(py: Python<'_>, config_json: &str, seed: Option<u64>) -> PyResult<String> {
    let report = py
        .detach(|| {
            let config = Config::from_json(config_json)?;
            let seed = seed
                .or_else(|| config.experiment.as_ref().map(|e| e.seed))
                .unwrap_or(0);
            ldp_curve(
                &config.sde_model()?,
                &config.event()?,
                &ldp_options(&config, seed)?,
            )
        })
        .map_err(err)?;
    Ok(serde_json::to_string(&report).expect("report serializes"))
}

/// Same as the `ldp` binary: runs `command` on a config file, writes
/// artifacts into `out` and returns the JSON summary.
#[pyfunction]
#[pyo3(signature = (command, config, out, seed=None, path=None))]
fn run(
    py: Python<'_>,
    command: &str,
    config: PathBuf,
    out: PathBuf,
    seed: Option<u64>,
    path: Option<PathBuf>,
) -> PyResult<String> {
    let cmd = match (command, path) {
        ("coeffs", _) => Command::Coeffs,
        ("action", Some(path)) => Command::Action { path },
        ("action", None) => {
            return Err(err(CoreError::InvalidArgument(
                "action needs `path`".into(),
            )))
        }
        ("minimize", _) => Command::Minimize,
        ("simulate", _) => Command::Simulate,
        ("verify", _) => Command::Verify,
        (other, _) => {
            return Err(err(CoreError::InvalidArgument(format!(
                "unknown command `{other}`"
            ))))
        }
    };
    let res = py
        .detach(|| run_experiment(&cmd, &config, &RunOptions { seed, out }))
        .map_err(err)?;
    Ok(serde_json::to_string(&res).expect("summary serializes"))
}

#[pymodule]
fn ldp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add("LdpError", m.py().get_type::<LdpError>())?;
    Ok(())
}
