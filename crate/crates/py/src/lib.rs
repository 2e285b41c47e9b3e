//! Python bindings. Reports cross the boundary as JSON and come back as plain
//! dicts; exact values stay `"num/den"` strings.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use orc_core::batch::parse_cost_matrix;
use orc_core::scalar::parse_rational;
use orc_core::transport::{w1_assignment, w1_lp_cost};
use orc_core::{
    curvature, run, run_compare, CurvatureReport, EdgeSelection, Fixture, InputFormat, Instance as CoreInstance,
    LocalNeighborhood, Method, NumericMode, QsimConfig, Rational, RunError, RunMeta, RunOptions, Scalar,
};

create_exception!(orc_py, OrcError, PyException, "Base class for errors raised by orc_py.");
create_exception!(orc_py, ConfigError, OrcError, "Invalid input or method/instance combination.");
create_exception!(orc_py, SolverError, OrcError, "A solver failed on a valid instance.");

fn config_err(e: impl ToString) -> PyErr {
    ConfigError::new_err(e.to_string())
}

fn run_err(e: RunError) -> PyErr {
    match e {
        RunError::Config { .. } => ConfigError::new_err(e.to_string()),
        RunError::Solver { .. } => SolverError::new_err(e.to_string()),
    }
}

fn json_to_py<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

fn parse<T: std::str::FromStr<Err = String>>(s: &str) -> PyResult<T> {
    s.parse().map_err(config_err)
}

/// Exact rational from an int, float, str or `fractions.Fraction` (via `str()`).
fn to_rational(obj: &Bound<'_, PyAny>) -> PyResult<Rational> {
    let text = obj.str()?.to_string();
    parse_rational(&text).ok_or_else(|| config_err(format!("not a finite number: {text}")))
}

fn to_cost(rows: &Bound<'_, PyAny>) -> PyResult<Vec<Vec<Rational>>> {
    rows.try_iter()?.map(|row| row?.try_iter()?.map(|v| to_rational(&v?)).collect()).collect()
}

/// A graph or a bare cost matrix.
#[pyclass(name = "Instance", module = "orc_py", frozen)]
struct PyInstance {
    inner: CoreInstance,
}

#[pymethods]
impl PyInstance {
    /// Parses `text` as `edge_list`, `json` or `cost_matrix`.
    #[staticmethod]
    #[pyo3(signature = (text, format = "edge_list"))]
    fn parse(text: &str, format: &str) -> PyResult<Self> {
        let format: InputFormat = parse(format)?;
        Ok(Self { inner: CoreInstance::parse(text, format).map_err(config_err)? })
    }

    /// A cost-matrix instance from nested lists of numbers.
    #[staticmethod]
    #[pyo3(signature = (cost, dxy = None))]
    fn from_cost(cost: &Bound<'_, PyAny>, dxy: Option<&Bound<'_, PyAny>>) -> PyResult<Self> {
        let cost = to_cost(cost)?;
        let dxy = dxy.map(to_rational).transpose()?.unwrap_or_else(|| Rational::from_i64(1));
        LocalNeighborhood::from_cost(cost.clone(), dxy.clone()).map_err(config_err)?;
        Ok(Self { inner: CoreInstance::Cost { cost, dxy } })
    }

    #[staticmethod]
    fn fixture(name: &str) -> PyResult<Self> {
        let fx: Fixture = name.parse().map_err(config_err)?;
        let format = if fx.is_cost_matrix() { InputFormat::CostMatrix } else { InputFormat::EdgeList };
        Ok(Self { inner: CoreInstance::parse(&fx.contents(), format).map_err(config_err)? })
    }

    #[getter]
    fn is_graph(&self) -> bool {
        matches!(self.inner, CoreInstance::Graph(_))
    }

    #[getter]
    fn is_tree(&self) -> bool {
        match &self.inner {
            CoreInstance::Graph(g) => orc_core::graph::verify_tree(g),
            CoreInstance::Cost { .. } => false,
        }
    }

    /// Vertex count, or `None` for a cost matrix.
    #[getter]
    fn vertex_count(&self) -> Option<usize> {
        match &self.inner {
            CoreInstance::Graph(g) => Some(g.vertex_count()),
            CoreInstance::Cost { .. } => None,
        }
    }

    /// Edges as `(u, v, weight)` with exact weights.
    fn edges(&self) -> Vec<(usize, usize, String)> {
        match &self.inner {
            CoreInstance::Graph(g) => g.edges().iter().map(|e| (e.u, e.v, e.w.to_string())).collect(),
            CoreInstance::Cost { .. } => vec![(0, 1, "cost matrix".into())],
        }
    }

    /// Curvature report (a dict) for the selected edges.
    #[pyo3(signature = (method = "lp", edges = None, numeric = "rational", include_endpoints = false,
                        margin = 0.05, eps = 1e-10, seed = 0, shots = None, cap = 1_000_000, max_iter = 100_000))]
    #[allow(clippy::too_many_arguments)]
    fn compute<'py>(
        &self,
        py: Python<'py>,
        method: &str,
        edges: Option<Vec<(usize, usize)>>,
        numeric: &str,
        include_endpoints: bool,
        margin: f64,
        eps: f64,
        seed: u64,
        shots: Option<u64>,
        cap: usize,
        max_iter: usize,
    ) -> PyResult<Bound<'py, PyAny>> {
        let method: Method = parse(method)?;
        let opts = options(edges, numeric, include_endpoints, margin, eps, seed, shots, cap, max_iter)?;
        let out = py.detach(|| run(&self.inner, method, &opts)).map_err(run_err)?;
        let report =
            CurvatureReport { records: out.records, skipped: out.skipped, summary: None, meta: meta(&opts, method) };
        json_to_py(py, &report.to_json())
    }

    /// Runs `qsim_tree` or `qsim_pq` next to its classical reference.
    #[pyo3(signature = (method = "qsim_pq", edges = None, numeric = "rational", include_endpoints = false,
                        margin = 0.05, eps = 1e-10, seed = 0, shots = None, cap = 1_000_000, max_iter = 100_000,
                        tol = None))]
    #[allow(clippy::too_many_arguments)]
    fn compare<'py>(
        &self,
        py: Python<'py>,
        method: &str,
        edges: Option<Vec<(usize, usize)>>,
        numeric: &str,
        include_endpoints: bool,
        margin: f64,
        eps: f64,
        seed: u64,
        shots: Option<u64>,
        cap: usize,
        max_iter: usize,
        tol: Option<f64>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let method: Method = parse(method)?;
        let opts = options(edges, numeric, include_endpoints, margin, eps, seed, shots, cap, max_iter)?;
        let (out, summary) = py.detach(|| run_compare(&self.inner, method, &opts, tol)).map_err(run_err)?;
        let report = CurvatureReport {
            records: out.records,
            skipped: out.skipped,
            summary: Some(summary),
            meta: meta(&opts, method),
        };
        json_to_py(py, &report.to_json())
    }

    fn __repr__(&self) -> String {
        match &self.inner {
            CoreInstance::Graph(g) => format!("Instance(graph, n={}, m={})", g.vertex_count(), g.edges().len()),
            CoreInstance::Cost { cost, .. } => {
                format!("Instance(cost, p={}, q={})", cost.len(), cost.first().map_or(0, Vec::len))
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn options(
    edges: Option<Vec<(usize, usize)>>,
    numeric: &str,
    include_endpoints: bool,
    margin: f64,
    eps: f64,
    seed: u64,
    shots: Option<u64>,
    cap: usize,
    max_iter: usize,
) -> PyResult<RunOptions> {
    Ok(RunOptions {
        numeric: parse::<NumericMode>(numeric)?,
        edges: edges.map_or(EdgeSelection::All, EdgeSelection::Edges),
        qsim: QsimConfig { margin, eps, seed, shots, cap, max_iter, include_endpoints, ..QsimConfig::default() },
        trace: false,
        parallel: true,
    })
}

fn meta(opts: &RunOptions, method: Method) -> RunMeta {
    RunMeta {
        version: orc_core::VERSION.to_string(),
        config: serde_json::json!({ "method": method, "options": opts }),
        wall_time_ms: None,
    }
}

/// W1 between uniform measures under `cost`. Exact values come back as `"num/den"`.
#[pyfunction]
#[pyo3(signature = (cost, numeric = "rational"))]
fn w1(cost: &Bound<'_, PyAny>, numeric: &str) -> PyResult<String> {
    let cost = to_cost(cost)?;
    match parse::<NumericMode>(numeric)? {
        NumericMode::Rational => Ok(w1_lp_cost(&cost).map_err(config_err)?.cost_value.to_string()),
        NumericMode::Float => {
            let cost: Vec<Vec<f64>> = cost.iter().map(|r| r.iter().map(f64::from_rational).collect()).collect();
            Ok(w1_lp_cost(&cost).map_err(config_err)?.cost_value.to_string())
        }
    }
}

/// `(value, pi)` of the optimal assignment of a square cost matrix; `pi[i]` is the row matched to column `i`.
#[pyfunction]
fn assignment(cost: &Bound<'_, PyAny>) -> PyResult<(String, Vec<usize>)> {
    let sol = w1_assignment(&to_cost(cost)?).map_err(config_err)?;
    Ok((sol.cost_value.to_string(), sol.pi))
}

/// Curvature `1 - W1/dxy` of a cost-matrix instance by a classical method.
#[pyfunction]
#[pyo3(signature = (cost, dxy, method = "lp"))]
fn edge_curvature(cost: &Bound<'_, PyAny>, dxy: &Bound<'_, PyAny>, method: &str) -> PyResult<(String, String)> {
    let nb = LocalNeighborhood::from_cost(to_cost(cost)?, to_rational(dxy)?).map_err(config_err)?;
    let res = curvature(&nb, parse(method)?).map_err(config_err)?;
    Ok((res.w1.to_string(), res.curvature.to_string()))
}

/// Text of a built-in fixture.
#[pyfunction]
fn fixture(name: &str) -> PyResult<String> {
    let fx: Fixture = name.parse().map_err(config_err)?;
    Ok(fx.contents())
}

/// Parses a cost-matrix document and returns `(cost, dxy)` as exact strings.
#[pyfunction]
fn read_cost_matrix(text: &str) -> PyResult<(Vec<Vec<String>>, String)> {
    let (cost, dxy) = parse_cost_matrix(text).map_err(config_err)?;
    Ok((cost.iter().map(|r| r.iter().map(ToString::to_string).collect()).collect(), dxy.to_string()))
}

#[pymodule]
fn orc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("OrcError", py.get_type::<OrcError>())?;
    m.add("ConfigError", py.get_type::<ConfigError>())?;
    m.add("SolverError", py.get_type::<SolverError>())?;
    m.add("METHODS", Method::ALL.iter().map(|m| m.name()).collect::<Vec<_>>())?;
    m.add("__version__", orc_core::VERSION)?;
    m.add_class::<PyInstance>()?;
    m.add_function(wrap_pyfunction!(w1, m)?)?;
    m.add_function(wrap_pyfunction!(assignment, m)?)?;
    m.add_function(wrap_pyfunction!(edge_curvature, m)?)?;
    m.add_function(wrap_pyfunction!(fixture, m)?)?;
    m.add_function(wrap_pyfunction!(read_cost_matrix, m)?)?;
    Ok(())
}
