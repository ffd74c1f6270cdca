use ndarray::Array2;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyString;
use serde::de::DeserializeOwned;
use serde::Serialize;

use esn_rmt::closedform;
use esn_rmt::deteq::{solve_prop1, Regime, SolverSettings};
use esn_rmt::ensembles::{self, Ensemble, MatrixSpec};
use esn_rmt::experiment::{self, ExperimentConfig};
use esn_rmt::gram::GramFamily;
use esn_rmt::tasks::{self, MackeyGlassParams};
use esn_rmt::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument { .. } | Error::Config(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Accept either a JSON string or any object `json.dumps` can serialize.
fn from_py<T: DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = if let Ok(s) = obj.downcast::<PyString>() {
        s.to_string()
    } else {
        obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?
    };
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Serialize through JSON so rows come back as plain dicts.
fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn to_rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn from_rows(rows: Vec<Vec<f64>>) -> PyResult<Array2<f64>> {
    let n = rows.len();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    if flat.len() != n * n {
        return Err(PyValueError::new_err("expected a square matrix"));
    }
    Array2::from_shape_vec((n, n), flat).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Lag-q Gram matrices of a connectivity matrix.
#[pyclass(name = "Gram", module = "esn_rmt")]
struct PyGram {
    inner: GramFamily,
}

#[pymethods]
impl PyGram {
    #[new]
    #[pyo3(signature = (w, tol = 1e-14))]
    fn new(py: Python<'_>, w: Vec<Vec<f64>>, tol: f64) -> PyResult<Self> {
        let w = from_rows(w)?;
        let inner = py.detach(|| GramFamily::new(&w, tol)).map_err(py_err)?;
        Ok(PyGram { inner })
    }

    /// Sample W from a matrix spec (`{"kind": ..., "n": ..., ...}`).
    #[staticmethod]
    #[pyo3(signature = (spec, seed, tol = 1e-14))]
    fn sample(py: Python<'_>, spec: &Bound<'_, PyAny>, seed: u64, tol: f64) -> PyResult<Self> {
        let spec: MatrixSpec = from_py(spec)?;
        let inner = py
            .detach(|| ensembles::sample_connectivity(&spec, seed).and_then(|w| GramFamily::new(&w, tol)))
            .map_err(py_err)?;
        Ok(PyGram { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn w(&self) -> Vec<Vec<f64>> {
        to_rows(self.inner.w())
    }

    fn s0(&self) -> Vec<Vec<f64>> {
        to_rows(self.inner.s0())
    }

    fn s_q(&self, q: isize) -> Vec<Vec<f64>> {
        to_rows(&self.inner.s_q(q))
    }

    fn lyapunov_residual(&self) -> f64 {
        self.inner.lyapunov_residual()
    }

    /// First column of the Toeplitz kernel solving the first-order system.
    fn kernel(&self, py: Python<'_>, t_len: usize) -> PyResult<Vec<f64>> {
        let pair = py
            .detach(|| solve_prop1(&self.inner, t_len, &SolverSettings::default()))
            .map_err(py_err)?;
        Ok(pair.kernel.values().to_vec())
    }

    fn __repr__(&self) -> String {
        format!("Gram(n={})", self.inner.n())
    }
}

/// A validated experiment config with the CLI's commands as methods.
#[pyclass(name = "Experiment", module = "esn_rmt")]
struct PyExperiment {
    cfg: ExperimentConfig,
}

#[pymethods]
impl PyExperiment {
    #[new]
    fn new(config: &Bound<'_, PyAny>) -> PyResult<Self> {
        let cfg: ExperimentConfig = from_py(config)?;
        cfg.validate().map_err(py_err)?;
        Ok(PyExperiment { cfg })
    }

    #[getter]
    fn c(&self) -> f64 {
        self.cfg.c()
    }

    fn sweep<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let rows = py.detach(|| experiment::sweep_rows(&self.cfg)).map_err(py_err)?;
        to_py(py, &rows)
    }

    fn memory_curve<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let rows = py.detach(|| experiment::memory_rows(&self.cfg)).map_err(py_err)?;
        to_py(py, &rows)
    }

    fn design<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let rows = py.detach(|| experiment::design_rows(&self.cfg)).map_err(py_err)?;
        to_py(py, &rows)
    }
}

#[pyfunction]
fn sample_connectivity(spec: &Bound<'_, PyAny>, seed: u64) -> PyResult<Vec<Vec<f64>>> {
    let spec: MatrixSpec = from_py(spec)?;
    ensembles::sample_connectivity(&spec, seed).map(|w| to_rows(&w)).map_err(py_err)
}

/// Standardized Mackey-Glass series with the default parameters.
#[pyfunction]
fn mackey_glass(length: usize, seed: u64) -> PyResult<Vec<f64>> {
    tasks::mackey_glass(length, seed, &MackeyGlassParams::default()).map_err(py_err)
}

/// Limiting diagonal lag profile of an invariant ensemble.
#[pyfunction]
#[pyo3(signature = (ensemble, t_len, t_hat, over = false))]
fn invariant_profile(ensemble: &Bound<'_, PyAny>, t_len: usize, t_hat: usize, over: bool) -> PyResult<Vec<f64>> {
    let ensemble: Ensemble = from_py(ensemble)?;
    let regime = if over { Regime::Over } else { Regime::Under };
    closedform::invariant_profile(&ensemble, t_len, t_hat, regime)
        .map(|p| p.entries)
        .map_err(py_err)
}

/// Closed-form memory capacity at delay `tau`.
#[pyfunction]
fn mc_closed(ensemble: &Bound<'_, PyAny>, c: f64, tau: usize) -> PyResult<f64> {
    let ensemble: Ensemble = from_py(ensemble)?;
    closedform::mc_closed(&ensemble, c, tau).map_err(py_err)
}

#[pymodule]
#[pyo3(name = "esn_rmt")]
fn esn_rmt_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGram>()?;
    m.add_class::<PyExperiment>()?;
    m.add_function(wrap_pyfunction!(sample_connectivity, m)?)?;
    m.add_function(wrap_pyfunction!(mackey_glass, m)?)?;
    m.add_function(wrap_pyfunction!(invariant_profile, m)?)?;
    m.add_function(wrap_pyfunction!(mc_closed, m)?)?;
    Ok(())
}
