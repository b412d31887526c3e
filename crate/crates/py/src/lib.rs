//! Python bindings: parse or generate problems, solve them with any of the
//! three algorithms, enumerate them with the oracle and run benchmarks.

use hcbb::bench::{
    brute_force_solve, generate_instance, reactor_network_with, run_benchmark, BenchOptions, Family, OracleResult,
    ReactorParams, StartStrategy, Suite,
};
use hcbb::bnb::{solve_minlp, Algorithm, BnbOptions, SolveReport, SolveStatus};
use hcbb::homotopy::{homotopy_value as path_value, HomotopyAnchor};
use hcbb::model::{parse_problem, print_problem, MinlpProblem};
use hcbb::nlp::NlpOptions;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

create_exception!(pyhcbb, SolverError, PyException);

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(value_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(name = "Problem", module = "pyhcbb", frozen, from_py_object)]
#[derive(Clone)]
pub struct PyProblem {
    inner: MinlpProblem,
}

#[pymethods]
impl PyProblem {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        parse_problem(text).map(|inner| PyProblem { inner }).map_err(value_err)
    }

    #[getter]
    fn num_vars(&self) -> usize {
        self.inner.num_vars()
    }

    #[getter]
    fn num_continuous(&self) -> usize {
        self.inner.num_continuous()
    }

    #[getter]
    fn num_binary(&self) -> usize {
        self.inner.num_binary()
    }

    #[getter]
    fn names(&self) -> Vec<String> {
        self.inner.names()
    }

    fn midpoint(&self) -> Vec<f64> {
        self.inner.midpoint()
    }

    fn objective_at(&self, point: Vec<f64>) -> PyResult<f64> {
        self.inner.objective_value(&point).map_err(value_err)
    }

    fn to_text(&self) -> String {
        print_problem(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Problem(n={}, m={})", self.inner.num_continuous(), self.inner.num_binary())
    }
}

#[pyclass(name = "SolveResult", module = "pyhcbb", frozen)]
pub struct PySolveResult {
    inner: SolveReport,
}

#[pymethods]
impl PySolveResult {
    #[getter]
    fn algorithm(&self) -> &'static str {
        self.inner.algorithm.as_str()
    }

    #[getter]
    fn status(&self) -> String {
        format!("{:?}", self.inner.status)
    }

    #[getter]
    fn optimal(&self) -> bool {
        self.inner.status == SolveStatus::Optimal
    }

    #[getter]
    fn objective(&self) -> Option<f64> {
        self.inner.objective
    }

    #[getter]
    fn point(&self) -> Option<Vec<f64>> {
        self.inner.point.clone()
    }

    #[getter]
    fn found_at_node(&self) -> Option<usize> {
        self.inner.found_at_node
    }

    #[getter]
    fn n_node(&self) -> usize {
        self.inner.n_node
    }

    #[getter]
    fn n_inf(&self) -> usize {
        self.inner.n_inf
    }

    #[getter]
    fn n_nlp(&self) -> usize {
        self.inner.n_nlp
    }

    #[getter]
    fn n_inf_post(&self) -> usize {
        self.inner.n_inf_post
    }

    #[getter]
    fn t_post_seconds(&self) -> f64 {
        self.inner.t_post_seconds
    }

    #[getter]
    fn wall_seconds(&self) -> f64 {
        self.inner.wall_seconds
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner)
    }

    fn __repr__(&self) -> String {
        format!("SolveResult(algorithm={}, status={}, objective={:?})", self.algorithm(), self.status(), self.inner.objective)
    }
}

#[pyclass(name = "OracleResult", module = "pyhcbb", frozen)]
pub struct PyOracleResult {
    inner: OracleResult,
}

#[pymethods]
impl PyOracleResult {
    #[getter]
    fn objective(&self) -> Option<f64> {
        self.inner.objective
    }

    #[getter]
    fn assignment(&self) -> Option<Vec<u32>> {
        self.inner.assignment.as_ref().map(|a| a.iter().map(|&b| u32::from(b)).collect())
    }

    #[getter]
    fn point(&self) -> Option<Vec<f64>> {
        self.inner.point.clone()
    }

    #[getter]
    fn nlp_solves(&self) -> usize {
        self.inner.nlp_solves
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner)
    }

    fn __repr__(&self) -> String {
        format!("OracleResult(objective={:?}, assignment={:?})", self.inner.objective, self.inner.assignment)
    }
}

fn start_strategy(start: Option<Bound<'_, PyAny>>) -> PyResult<StartStrategy> {
    let Some(start) = start else { return Ok(StartStrategy::Midpoint) };
    if let Ok(seed) = start.extract::<u64>() {
        return Ok(StartStrategy::Random(seed));
    }
    if let Ok(text) = start.extract::<String>() {
        return match text.as_str() {
            "midpoint" => Ok(StartStrategy::Midpoint),
            _ => Err(PyValueError::new_err(format!("unknown start `{text}`"))),
        };
    }
    Ok(StartStrategy::Point(start.extract::<Vec<f64>>()?))
}

/// Solves `problem` and returns the run report. `start` is `None` or
/// "midpoint", an integer seed for a random start, or a list of values.
#[pyfunction]
#[pyo3(signature = (
    problem, algorithm = "hcbb-rb", start = None, *, dt_min = 0.01, delta_match = 0.1, int_tol = 1e-5,
    max_steps = 50, node_limit = 10_000, time_limit = 3600.0, cutoff = None, trace = false
))]
#[allow(clippy::too_many_arguments)]
fn solve(
    py: Python<'_>,
    problem: &PyProblem,
    algorithm: &str,
    start: Option<Bound<'_, PyAny>>,
    dt_min: f64,
    delta_match: f64,
    int_tol: f64,
    max_steps: usize,
    node_limit: usize,
    time_limit: f64,
    cutoff: Option<f64>,
    trace: bool,
) -> PyResult<PySolveResult> {
    let algorithm: Algorithm = algorithm.parse().map_err(value_err)?;
    let point = start_strategy(start)?.resolve(&problem.inner).map_err(value_err)?;
    let mut opts = BnbOptions {
        int_tol,
        node_limit,
        time_limit_seconds: time_limit,
        post_time_limit_seconds: time_limit,
        cutoff,
        record_trace: trace,
        ..BnbOptions::default()
    };
    opts.homotopy.dt_min = dt_min;
    opts.homotopy.delta = delta_match;
    opts.homotopy.n_max = max_steps;
    opts.validate().map_err(value_err)?;
    let prob = &problem.inner;
    py.detach(|| solve_minlp(prob, algorithm, &point, &opts))
        .map(|inner| PySolveResult { inner })
        .map_err(|e| SolverError::new_err(e.to_string()))
}

/// Enumerates every binary assignment of `problem`.
#[pyfunction]
#[pyo3(signature = (problem, multistarts = 5))]
fn oracle(py: Python<'_>, problem: &PyProblem, multistarts: usize) -> PyResult<PyOracleResult> {
    let prob = &problem.inner;
    py.detach(|| brute_force_solve(prob, multistarts, &NlpOptions::default()))
        .map(|inner| PyOracleResult { inner })
        .map_err(value_err)
}

/// Seeded random instance of family `convex_qp`, `nonconvex_poly` or
/// `narrow_channel`.
#[pyfunction]
fn generate(seed: u64, n: usize, m: usize, family: &str) -> PyResult<PyProblem> {
    let family: Family = family.parse().map_err(value_err)?;
    generate_instance(seed, n, m, family).map(|inner| PyProblem { inner }).map_err(value_err)
}

/// Three-stage reactor selection problem with the given conversion target.
#[pyfunction]
#[pyo3(signature = (conversion = 0.9))]
fn reactor(conversion: f64) -> PyResult<PyProblem> {
    if !(0.0..1.0).contains(&conversion) {
        return Err(PyValueError::new_err("conversion must lie in [0, 1)"));
    }
    Ok(PyProblem { inner: reactor_network_with(&ReactorParams { conversion, ..ReactorParams::default() }) })
}

/// Position of a branched binary at path parameter `t`.
#[pyfunction]
fn homotopy_value(parent: f64, target: f64, t: f64) -> PyResult<f64> {
    let anchor = HomotopyAnchor::new(0, parent, target).map_err(value_err)?;
    path_value(&anchor, t).map_err(value_err)
}

/// Runs a built-in suite and returns its rows as dictionaries.
#[pyfunction(name = "bench")]
#[pyo3(signature = (suite, algorithms = None, jobs = 1, multistarts = 5))]
fn run_suite<'py>(
    py: Python<'py>,
    suite: &str,
    algorithms: Option<Vec<String>>,
    jobs: usize,
    multistarts: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let suite: Suite = suite.parse().map_err(value_err)?;
    let algorithms = match algorithms {
        None => Algorithm::ALL.to_vec(),
        Some(names) => names.iter().map(|a| a.parse::<Algorithm>().map_err(value_err)).collect::<PyResult<_>>()?,
    };
    let opts = BenchOptions { jobs, multistarts, ..BenchOptions::default() };
    let report = py.detach(|| run_benchmark(&suite.instances(), &algorithms, &opts)).map_err(value_err)?;
    to_py(py, &report.rows)
}

#[pymodule]
fn pyhcbb(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProblem>()?;
    m.add_class::<PySolveResult>()?;
    m.add_class::<PyOracleResult>()?;
    m.add("SolverError", m.py().get_type::<SolverError>())?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(oracle, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(reactor, m)?)?;
    m.add_function(wrap_pyfunction!(homotopy_value, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    Ok(())
}
