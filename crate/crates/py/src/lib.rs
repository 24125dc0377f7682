//! Python bindings for the `saddle` crate.
//!
//! Vectors cross the boundary as flat lists `[x..., y...]`; the split point
//! comes from the problem. Structured results (summaries, traces, reports)
//! are handed over as plain dicts.

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

use saddle::harness::{self, ExecOptions, PlotKind, TraceFormat};
use saddle::problems::PROBLEM_NAMES;
use saddle::{
    Beta1Schedule, Error, FeasibleSet, NoiseModel, OptimizerKind, ProblemSpec, RunOptions,
    SaddleVector, ScheduleSpec,
};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        Error::Audit(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// A saddle-point problem `min_x max_y phi(x, y)`.
///
/// ```text
/// p = Problem("bilinear")
/// p.field([1.0, 0.0])   # V(z) = (-grad_x phi, grad_y phi)
/// ```
#[pyclass(module = "pysaddle", frozen)]
struct Problem {
    inner: ProblemSpec,
}

impl Problem {
    fn point(&self, z: Vec<f64>) -> PyResult<SaddleVector> {
        SaddleVector::new(z, self.inner.n1()).map_err(py_err)
    }
}

#[pymethods]
impl Problem {
    /// Built-in problem by name, optionally restricted to a ball of `radius`.
    #[new]
    #[pyo3(signature = (name, radius=None))]
    fn new(name: &str, radius: Option<f64>) -> PyResult<Self> {
        let mut inner = ProblemSpec::by_name(name).map_err(py_err)?;
        if let Some(r) = radius {
            inner = inner.with_feasible(FeasibleSet::ball(r)).map_err(py_err)?;
        }
        Ok(Self { inner })
    }

    /// `phi(x, y) = x^T A y + a^T x + b^T y`.
    #[staticmethod]
    #[pyo3(signature = (matrix, a=None, b=None))]
    fn bilinear(matrix: Vec<Vec<f64>>, a: Option<Vec<f64>>, b: Option<Vec<f64>>) -> PyResult<Self> {
        let n1 = matrix.len();
        let n2 = matrix.first().map_or(0, Vec::len);
        let a = a.unwrap_or_else(|| vec![0.0; n1]);
        let b = b.unwrap_or_else(|| vec![0.0; n2]);
        let inner = ProblemSpec::bilinear(&matrix, a, b).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn quadratic_saddle(n1: usize, n2: usize) -> PyResult<Self> {
        Ok(Self {
            inner: ProblemSpec::quadratic_saddle(n1, n2).map_err(py_err)?,
        })
    }

    #[getter]
    fn name(&self) -> &str {
        self.inner.name()
    }

    #[getter]
    fn n1(&self) -> usize {
        self.inner.n1()
    }

    #[getter]
    fn n2(&self) -> usize {
        self.inner.n2()
    }

    #[getter]
    fn lipschitz(&self) -> Option<f64> {
        self.inner.lipschitz()
    }

    #[getter]
    fn grad_bound(&self) -> Option<f64> {
        self.inner.grad_bound()
    }

    #[getter]
    fn reference(&self) -> Option<Vec<f64>> {
        self.inner.reference().map(|r| r.as_slice().to_vec())
    }

    fn objective(&self, z: Vec<f64>) -> Option<f64> {
        self.inner.objective(&z)
    }

    /// The joint field `V(z)`.
    fn field(&self, z: Vec<f64>) -> PyResult<Vec<f64>> {
        let v = saddle::evaluate_field(&self.inner, &self.point(z)?).map_err(py_err)?;
        Ok(v.as_slice().to_vec())
    }

    /// Central-difference check of `field` against the objective.
    #[pyo3(signature = (z, h=1e-5))]
    fn fd_check<'py>(&self, py: Python<'py>, z: Vec<f64>, h: f64) -> PyResult<Bound<'py, PyDict>> {
        let r = saddle::fd_check(&self.inner, &self.point(z)?, h).map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("max_rel_err", r.max_rel_err)?;
        d.set_item("max_abs_err", r.max_abs_err)?;
        d.set_item("pass", r.pass)?;
        Ok(d)
    }

    /// `(total, x_sided, y_sided)` of `<-V(z), z - reference>`.
    fn mvi_probe(&self, z: Vec<f64>, reference: Vec<f64>) -> PyResult<(f64, f64, f64)> {
        let m = saddle::mvi_probe(&self.inner, &self.point(z)?, &self.point(reference)?)
            .map_err(py_err)?;
        Ok((m.total, m.x_sided, m.y_sided))
    }

    /// Projected-step residual `|z - P(z + eta V(z))|`.
    fn residual(&self, z: Vec<f64>, eta: f64) -> PyResult<f64> {
        saddle::residual(&self.inner, &self.point(z)?, eta, self.inner.feasible()).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("Problem({:?}, n1={}, n2={})", self.inner.name(), self.inner.n1(), self.inner.n2())
    }
}

/// Outcome of a single optimizer run.
#[pyclass(module = "pysaddle", frozen)]
struct RunResult {
    inner: saddle::RunResult,
}

#[pymethods]
impl RunResult {
    #[getter]
    fn optimizer(&self) -> String {
        self.inner.kind.to_string()
    }

    #[getter]
    fn last(&self) -> Vec<f64> {
        self.inner.last.as_slice().to_vec()
    }

    #[getter]
    fn output(&self) -> Vec<f64> {
        self.inner.output.as_slice().to_vec()
    }

    #[getter]
    fn selected_index(&self) -> usize {
        self.inner.selected_index
    }

    #[getter]
    fn min_grad_index(&self) -> usize {
        self.inner.min_grad_index
    }

    #[getter]
    fn momentum_max_norm(&self) -> f64 {
        self.inner.momentum_max_norm
    }

    #[getter]
    fn max_norm_seen(&self) -> f64 {
        self.inner.max_norm_seen
    }

    #[getter]
    fn evaluations(&self) -> u64 {
        self.inner.evaluations
    }

    #[getter]
    fn samples(&self) -> u64 {
        self.inner.samples
    }

    #[getter]
    fn monotonicity_violations(&self) -> u64 {
        self.inner.monotonicity.violations
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.inner.warnings.clone()
    }

    #[getter]
    fn trajectory(&self) -> Option<Vec<Vec<f64>>> {
        self.inner
            .trajectory
            .as_ref()
            .map(|t| t.iter().map(|z| z.as_slice().to_vec()).collect())
    }

    /// Per-iteration diagnostics as a list of dicts.
    fn trace<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.trace)
    }

    fn __len__(&self) -> usize {
        self.inner.trace.len()
    }
}

/// Runs `optimizer` from `z0` for `n_iters` iterations.
///
/// `beta1` is a constant first-moment weight; `sigma > 0` adds Gaussian
/// oracle noise. Everything else uses the library defaults.
#[pyfunction]
#[pyo3(signature = (problem, optimizer, z0, n_iters, eta=0.1, seed=0, delta=None, beta1=None, sigma=None, record_trajectory=false))]
#[allow(clippy::too_many_arguments)]
fn run(
    py: Python<'_>,
    problem: &Problem,
    optimizer: &str,
    z0: Vec<f64>,
    n_iters: usize,
    eta: f64,
    seed: u64,
    delta: Option<f64>,
    beta1: Option<f64>,
    sigma: Option<f64>,
    record_trajectory: bool,
) -> PyResult<RunResult> {
    let kind: OptimizerKind = optimizer.parse().map_err(py_err)?;
    let mut sched = ScheduleSpec { eta, ..Default::default() };
    if let Some(d) = delta {
        sched.delta = d;
    }
    if let Some(b) = beta1 {
        sched.beta1 = Beta1Schedule::Constant { value: b };
    }
    let noise = match sigma {
        Some(s) if s > 0.0 => NoiseModel::Gaussian { sigma: s },
        _ => NoiseModel::None,
    };
    let z0 = problem.point(z0)?;
    let mut opts = RunOptions::new(n_iters, seed);
    opts.record_trajectory = record_trajectory;
    let inner = py
        .detach(|| saddle::run(kind, &problem.inner, &noise, &sched, &z0, &opts))
        .map_err(py_err)?;
    Ok(RunResult { inner })
}

/// Least-squares slope of `log v` against `log n`: `(slope, intercept, r2)`.
#[pyfunction]
fn rate_fit(points: Vec<(f64, f64)>) -> PyResult<(f64, f64, f64)> {
    let f = saddle::rate_fit(&points).map_err(py_err)?;
    Ok((f.slope, f.intercept, f.r2))
}

/// Parses and validates a JSON config; returns its canonical form and hash.
#[pyfunction]
fn parse_config<'py>(py: Python<'py>, text: &str) -> PyResult<(Bound<'py, PyAny>, String)> {
    let cfg = harness::parse_config(text).map_err(py_err)?;
    Ok((to_py(py, &cfg)?, cfg.hash()))
}

/// Runs every seed of a JSON config and returns the summary dict. With
/// `out_dir`, traces, sidecars, `summary.json` and an optional plot are written.
#[pyfunction]
#[pyo3(signature = (text, out_dir=None, format="csv", plot=None))]
fn execute<'py>(
    py: Python<'py>,
    text: &str,
    out_dir: Option<std::path::PathBuf>,
    format: &str,
    plot: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = harness::parse_config(text).map_err(py_err)?;
    let opts = ExecOptions {
        out_dir,
        format: format.parse::<TraceFormat>().map_err(py_err)?,
        plot: plot.map(str::parse::<PlotKind>).transpose().map_err(py_err)?,
    };
    let summary = py.detach(|| harness::execute(&cfg, &opts)).map_err(py_err)?;
    to_py(py, &summary)
}

#[pyfunction]
fn list_problems() -> Vec<&'static str> {
    PROBLEM_NAMES.to_vec()
}

#[pyfunction]
fn list_optimizers() -> Vec<String> {
    OptimizerKind::ALL.iter().map(ToString::to_string).collect()
}

#[pymodule]
fn pysaddle(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Problem>()?;
    m.add_class::<RunResult>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(rate_fit, m)?)?;
    m.add_function(wrap_pyfunction!(parse_config, m)?)?;
    m.add_function(wrap_pyfunction!(execute, m)?)?;
    m.add_function(wrap_pyfunction!(list_problems, m)?)?;
    m.add_function(wrap_pyfunction!(list_optimizers, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
