//! Python module `rectpoincare`: rectangles, weight constants, exponents and the check catalog.
//!
//! Reports and catalog entries cross the boundary as plain dicts (via their JSON form).

use std::collections::BTreeMap;

use pyo3::exceptions::{PyKeyError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use rectpoincare_core::conditions::{b_wq, m_choice, sobolev_exponent, ExponentKind, ExponentParams};
use rectpoincare_core::expr::Expr;
use rectpoincare_core::grid::{build_grid, Domain, Rect};
use rectpoincare_core::verify::{self, CheckConfig, CATALOG};
use rectpoincare_core::weights::{make_weight, weight_report};
use rectpoincare_core::Error;

fn to_py_err(err: Error) -> PyErr {
    match err {
        Error::UnknownCheck { .. } => PyKeyError::new_err(err.to_string()),
        Error::Io(_) => PyRuntimeError::new_err(err.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_python<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn domain(lower: Vec<f64>, upper: Vec<f64>, blocks: Option<Vec<usize>>) -> PyResult<Domain> {
    match blocks {
        Some(b) if !b.is_empty() => Domain::cube_product(&lower, &upper, &b),
        _ => Domain::new(&lower, &upper),
    }
    .map_err(to_py_err)
}

/// A dyadic descendant of a box.
#[pyclass(name = "Rect", frozen)]
struct PyRect {
    inner: Rect,
}

#[pymethods]
impl PyRect {
    #[new]
    #[pyo3(signature = (lower, upper, level=0, index=None, blocks=None))]
    fn new(lower: Vec<f64>, upper: Vec<f64>, level: u32, index: Option<Vec<u64>>, blocks: Option<Vec<usize>>) -> PyResult<Self> {
        let domain = domain(lower, upper, blocks)?;
        let index = index.unwrap_or_else(|| vec![0; domain.dim()]);
        Ok(Self { inner: Rect::new(domain, level, &index).map_err(to_py_err)? })
    }

    #[getter]
    fn level(&self) -> u32 {
        self.inner.level()
    }

    #[getter]
    fn index(&self) -> Vec<u64> {
        self.inner.index().to_vec()
    }

    #[getter]
    fn sides(&self) -> Vec<f64> {
        (0..self.inner.dim()).map(|a| self.inner.side(a)).collect()
    }

    #[getter]
    fn diameter(&self) -> f64 {
        self.inner.diameter()
    }

    #[getter]
    fn measure(&self) -> f64 {
        self.inner.measure()
    }

    #[getter]
    fn eccentricity(&self) -> f64 {
        self.inner.eccentricity()
    }

    /// `None` unless the box is a product of cubes.
    #[getter]
    fn block_eccentricity(&self) -> Option<f64> {
        self.inner.block_eccentricity()
    }

    fn children(&self) -> Vec<PyRect> {
        self.inner.children().into_iter().map(|inner| PyRect { inner }).collect()
    }

    fn __repr__(&self) -> String {
        format!("Rect(level={}, index={:?}, sides={:?})", self.level(), self.index(), self.sides())
    }
}

#[pyfunction]
fn check_ids() -> Vec<&'static str> {
    verify::check_ids()
}

/// Every catalog entry as a dict.
#[pyfunction]
fn catalog(py: Python<'_>) -> PyResult<Bound<'_, PyAny>> {
    to_python(py, &CATALOG)
}

#[allow(clippy::too_many_arguments)]
fn check_config(
    resolution: Option<usize>,
    functions: Option<Vec<String>>,
    weight: Option<String>,
    measure: Option<String>,
    params: Option<BTreeMap<String, f64>>,
    seed: u64,
    lower: Option<Vec<f64>>,
    upper: Option<Vec<f64>>,
    blocks: Option<Vec<usize>>,
) -> PyResult<CheckConfig> {
    let domain = match (lower, upper) {
        (Some(lo), Some(hi)) => Some(domain(lo, hi, blocks)?),
        (None, None) => None,
        _ => return Err(PyValueError::new_err("give both `lower` and `upper`, or neither")),
    };
    Ok(CheckConfig {
        domain,
        resolution,
        functions: functions.unwrap_or_default(),
        weight,
        measure,
        params: params.unwrap_or_default(),
        seed,
        pair_budget: None,
    })
}

/// Runs one check and returns its report.
#[pyfunction]
#[pyo3(signature = (id, *, resolution=None, functions=None, weight=None, measure=None, params=None, seed=0, lower=None, upper=None, blocks=None))]
#[allow(clippy::too_many_arguments)]
fn run_check<'py>(
    py: Python<'py>,
    id: &str,
    resolution: Option<usize>,
    functions: Option<Vec<String>>,
    weight: Option<String>,
    measure: Option<String>,
    params: Option<BTreeMap<String, f64>>,
    seed: u64,
    lower: Option<Vec<f64>>,
    upper: Option<Vec<f64>>,
    blocks: Option<Vec<usize>>,
) -> PyResult<Bound<'py, PyAny>> {
    let config = check_config(resolution, functions, weight, measure, params, seed, lower, upper, blocks)?;
    let report = py.detach(|| verify::run_check(id, &config)).map_err(to_py_err)?;
    to_python(py, &report)
}

/// One report per value of `parameter` (`"resolution"` sweeps the grid).
#[pyfunction]
#[pyo3(signature = (id, parameter, values, *, resolution=None, functions=None, weight=None, params=None, seed=0))]
#[allow(clippy::too_many_arguments)]
fn sweep<'py>(
    py: Python<'py>,
    id: &str,
    parameter: &str,
    values: Vec<f64>,
    resolution: Option<usize>,
    functions: Option<Vec<String>>,
    weight: Option<String>,
    params: Option<BTreeMap<String, f64>>,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let config = check_config(resolution, functions, weight, None, params, seed, None, None, None)?;
    let reports = py.detach(|| verify::sweep(id, parameter, &values, &config)).map_err(to_py_err)?;
    to_python(py, &reports)
}

/// Improved exponent `p*` of kind `classic`, `weighted`, `smallness` or `fractional-a1`.
#[pyfunction]
#[pyo3(signature = (kind, p, n, *, delta=None, q=None, m=None, weight_constant=None))]
fn sobolev(kind: &str, p: f64, n: usize, delta: Option<f64>, q: Option<f64>, m: Option<f64>, weight_constant: Option<f64>) -> PyResult<f64> {
    let kind = match kind {
        "classic" => ExponentKind::Classic,
        "weighted" => ExponentKind::Weighted,
        "smallness" => ExponentKind::Smallness,
        "fractional-a1" => ExponentKind::FractionalA1,
        other => return Err(PyValueError::new_err(format!("unknown exponent kind `{other}`"))),
    };
    let params = ExponentParams { p, n, delta, q, m, awc: weight_constant };
    sobolev_exponent(kind, &params).map_err(to_py_err)
}

/// `(M, B_{w,q})` for a weight constant `[w]_{A_q}`.
#[pyfunction]
fn exponent_constants(weight_constant: f64, q: f64) -> (f64, f64) {
    (m_choice(weight_constant, q), b_wq(weight_constant, q))
}

/// Muckenhoupt constants for each `p` and the Fujii–Wilson constant of a weight on `[0,1]^dim`.
#[pyfunction]
#[pyo3(signature = (spec, *, dim=2, resolution=64, ps=vec![1.0, 2.0], depth=4, shifts=2, seed=0))]
#[allow(clippy::too_many_arguments)]
fn weight_constants<'py>(
    py: Python<'py>,
    spec: &str,
    dim: usize,
    resolution: usize,
    ps: Vec<f64>,
    depth: u32,
    shifts: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let report = py
        .detach(|| {
            let grid = build_grid(Domain::unit(dim)?, &vec![resolution; dim])?;
            let w = make_weight(spec, grid)?;
            weight_report(&w, &ps, depth, shifts, seed)
        })
        .map_err(to_py_err)?;
    to_python(py, &report)
}

/// Riesz potential of the cells `omega` at cell `z` on a uniform grid over the box.
#[pyfunction]
fn riesz_potential_bound(
    py: Python<'_>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    resolution: usize,
    omega: Vec<usize>,
    z: usize,
    alpha: f64,
) -> PyResult<Bound<'_, PyAny>> {
    let domain = domain(lower, upper, None)?;
    let grid = build_grid(domain, &vec![resolution; domain.dim()]).map_err(to_py_err)?;
    let bound = verify::riesz_potential_bound(&grid, &omega, z, alpha).map_err(to_py_err)?;
    to_python(py, &bound)
}

/// Canonical printed form of an expression in `x1..x{dim}`.
#[pyfunction]
fn parse_expression(text: &str, dim: usize) -> PyResult<String> {
    Expr::parse(text, dim).map(|e| e.to_string()).map_err(to_py_err)
}

#[pymodule]
fn rectpoincare(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRect>()?;
    m.add_function(wrap_pyfunction!(check_ids, m)?)?;
    m.add_function(wrap_pyfunction!(catalog, m)?)?;
    m.add_function(wrap_pyfunction!(run_check, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(sobolev, m)?)?;
    m.add_function(wrap_pyfunction!(exponent_constants, m)?)?;
    m.add_function(wrap_pyfunction!(weight_constants, m)?)?;
    m.add_function(wrap_pyfunction!(riesz_potential_bound, m)?)?;
    m.add_function(wrap_pyfunction!(parse_expression, m)?)?;
    Ok(())
}
