//! Python bindings. Pricing calls release the interpreter lock while the
//! simulation runs.

use american_fbsde as core;
use american_fbsde::{Bandwidth, BlackScholesParams, HestonParams, MollifierConfig, OptionKind};
use fbsde_cli::{experiments, run_price, ExperimentSpec, OutputFormat};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Market dynamics: Black-Scholes or Heston.
#[pyclass(frozen, skip_from_py_object, module = "fbsde")]
#[derive(Clone)]
pub struct Model(pub core::Model);

#[pymethods]
impl Model {
    #[staticmethod]
    #[pyo3(signature = (r, y, sigma))]
    fn black_scholes(r: f64, y: f64, sigma: f64) -> PyResult<Self> {
        let m = core::Model::BlackScholes(BlackScholesParams { r, y, sigma });
        m.validate().map_err(err)?;
        Ok(Self(m))
    }

    #[staticmethod]
    #[pyo3(signature = (r, y, v0, xi, theta, eta, rho))]
    fn heston(r: f64, y: f64, v0: f64, xi: f64, theta: f64, eta: f64, rho: f64) -> PyResult<Self> {
        let m = core::Model::Heston(HestonParams {
            r,
            y,
            v0,
            xi,
            theta,
            eta,
            rho,
        });
        m.validate().map_err(err)?;
        Ok(Self(m))
    }

    #[getter]
    fn kind(&self) -> &'static str {
        match self.0 {
            core::Model::BlackScholes(_) => "black-scholes",
            core::Model::Heston(_) => "heston",
        }
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.0)
    }
}

/// Vanilla contract: `kind` is "call" or "put".
#[pyclass(frozen, skip_from_py_object, module = "fbsde")]
#[derive(Clone)]
pub struct OptionSpec(pub core::OptionSpec);

#[pymethods]
impl OptionSpec {
    #[new]
    fn new(kind: &str, strike: f64, expiry: f64, spot: f64) -> PyResult<Self> {
        let kind = match kind.to_ascii_lowercase().as_str() {
            "call" => OptionKind::Call,
            "put" => OptionKind::Put,
            other => return Err(err(format!("kind must be 'call' or 'put', got {other:?}"))),
        };
        core::OptionSpec::new(kind, strike, expiry, spot).map(Self).map_err(err)
    }

    #[getter]
    fn strike(&self) -> f64 {
        self.0.strike
    }

    #[getter]
    fn expiry(&self) -> f64 {
        self.0.expiry
    }

    #[getter]
    fn spot(&self) -> f64 {
        self.0.spot
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.0)
    }
}

/// Simulation settings. `intensity` is the interaction clock rate. Kernel
/// variances are absolute: `h` for all three, or `h0`, `h1`, `h2` per kernel.
#[pyclass(frozen, skip_from_py_object, module = "fbsde")]
#[derive(Clone)]
pub struct SimConfig(pub core::SimConfig);

#[pymethods]
impl SimConfig {
    #[new]
    #[pyo3(signature = (
        n_paths = 100_000, n_steps = 1000, intensity = 2.0, order = 3, seed = 1, workers = 1,
        h = 1.0, h0 = None, h1 = None, h2 = None, common_random_numbers = true
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        n_paths: u64,
        n_steps: usize,
        intensity: f64,
        order: usize,
        seed: u64,
        workers: usize,
        h: f64,
        h0: Option<f64>,
        h1: Option<f64>,
        h2: Option<f64>,
        common_random_numbers: bool,
    ) -> PyResult<Self> {
        let abs = |x: Option<f64>| Bandwidth::Absolute(x.unwrap_or(h));
        let cfg = core::SimConfig {
            n_paths,
            n_steps,
            lambda: intensity,
            order,
            mollifier: MollifierConfig {
                h0: abs(h0),
                h1: abs(h1),
                h2: abs(h2),
            },
            seed,
            workers,
            common_random_numbers,
        };
        cfg.validate().map_err(err)?;
        Ok(Self(cfg))
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.0)
    }
}

/// Per-order means and the cumulative prices; index 0 is the European value.
#[pyclass(frozen, module = "fbsde")]
pub struct ExpansionResult(core::ExpansionResult);

#[pymethods]
impl ExpansionResult {
    #[getter]
    fn means(&self) -> Vec<f64> {
        self.0.means.clone()
    }

    #[getter]
    fn stderrs(&self) -> Vec<f64> {
        self.0.stderrs.clone()
    }

    #[getter]
    fn cumulative(&self) -> Vec<f64> {
        self.0.cumulative.clone()
    }

    #[getter]
    fn cumulative_stderrs(&self) -> Vec<f64> {
        self.0.cumulative_stderrs.clone()
    }

    #[getter]
    fn n_paths(&self) -> u64 {
        self.0.n_paths
    }

    #[getter]
    fn price(&self) -> f64 {
        self.0.price()
    }

    fn __repr__(&self) -> String {
        format!(
            "ExpansionResult(cumulative={:?}, n_paths={})",
            self.0.cumulative, self.0.n_paths
        )
    }
}

fn bs_only(model: &Model) -> PyResult<BlackScholesParams> {
    match model.0 {
        core::Model::BlackScholes(p) => Ok(p),
        core::Model::Heston(_) => Err(err("only available for the Black-Scholes model")),
    }
}

/// European price at inception (closed form or Fourier).
#[pyfunction]
fn european_price(model: &Model, spec: &OptionSpec) -> PyResult<f64> {
    core::EuropeanPricer::new(&model.0, &spec.0)
        .price_at_inception()
        .map_err(err)
}

/// Expansion estimate of the American price up to `config.order`.
#[pyfunction]
fn price_american(py: Python<'_>, model: &Model, spec: &OptionSpec, config: &SimConfig) -> PyResult<ExpansionResult> {
    let (m, s, c) = (model.0, spec.0, config.0);
    py.detach(move || core::price_american(&m, &s, &c))
        .map(ExpansionResult)
        .map_err(err)
}

/// CRR lattice American price.
#[pyfunction]
#[pyo3(signature = (model, spec, levels = 2000))]
fn tree_american(model: &Model, spec: &OptionSpec, levels: usize) -> PyResult<f64> {
    core::tree_american(&bs_only(model)?, &spec.0, &core::TreeConfig { n_levels: levels }).map_err(err)
}

/// Deterministic first-order premium by quadrature.
#[pyfunction]
fn quadrature_v1(model: &Model, spec: &OptionSpec) -> PyResult<f64> {
    core::quadrature_v1(&bs_only(model)?, &spec.0, &core::QuadratureConfig::default()).map_err(err)
}

/// Deterministic second-order term by quadrature.
#[pyfunction]
fn quadrature_v2(py: Python<'_>, model: &Model, spec: &OptionSpec) -> PyResult<f64> {
    let p = bs_only(model)?;
    let s = spec.0;
    py.detach(move || core::quadrature_v2(&p, &s, &core::QuadratureConfig::default()))
        .map_err(err)
}

/// Names of the bundled experiment files.
#[pyfunction]
fn experiment_names() -> Vec<&'static str> {
    experiments::names()
}

/// Runs an experiment, given either a bundled name or TOML text, and returns
/// the report as "csv", "json" or "pretty-table".
#[pyfunction]
#[pyo3(signature = (source, format = "csv", paths = None))]
fn run_experiment(py: Python<'_>, source: &str, format: &str, paths: Option<u64>) -> PyResult<String> {
    let mut spec = match experiments::source(source) {
        Some(_) => experiments::load(source),
        None => ExperimentSpec::from_toml(source, "<python>"),
    }
    .map_err(err)?;
    if let Some(n) = paths {
        spec.sim.paths = n;
    }
    let format = match format {
        "csv" => OutputFormat::Csv,
        "json" => OutputFormat::Json,
        "pretty-table" => OutputFormat::PrettyTable,
        other => return Err(err(format!("unknown format {other:?}"))),
    };
    let report = py.detach(move || run_price(&spec)).map_err(err)?;
    match format {
        OutputFormat::Csv => Ok(report.to_csv()),
        OutputFormat::Json => report.to_json().map_err(err),
        OutputFormat::PrettyTable => Ok(report.to_pretty()),
    }
}

#[pymodule]
fn fbsde(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}

/// Adds every class and function to `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Model>()?;
    m.add_class::<OptionSpec>()?;
    m.add_class::<SimConfig>()?;
    m.add_class::<ExpansionResult>()?;
    m.add_function(wrap_pyfunction!(european_price, m)?)?;
    m.add_function(wrap_pyfunction!(price_american, m)?)?;
    m.add_function(wrap_pyfunction!(tree_american, m)?)?;
    m.add_function(wrap_pyfunction!(quadrature_v1, m)?)?;
    m.add_function(wrap_pyfunction!(quadrature_v2, m)?)?;
    m.add_function(wrap_pyfunction!(experiment_names, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
