//! Python bindings: matrices move across the boundary as nested lists,
//! configs as keyword arguments. Heavy lifting stays in the core crate.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use badmm::datagen;
use badmm::models::rpca::{self, RpcaConfig};
use badmm::numerics;
use badmm::prox;

fn err(e: badmm::Error) -> PyErr {
    match e {
        badmm::Error::Numeric(_) | badmm::Error::SolverFailure { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Dense real matrix; constructed from a list of rows.
#[pyclass(name = "Matrix", skip_from_py_object)]
#[derive(Clone)]
struct PyMatrix {
    inner: numerics::Matrix,
}

#[pymethods]
impl PyMatrix {
    #[new]
    fn new(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(PyMatrix {
            inner: numerics::Matrix::from_rows(rows).map_err(err)?,
        })
    }

    #[staticmethod]
    fn zeros(rows: usize, cols: usize) -> PyResult<Self> {
        if rows == 0 || cols == 0 {
            return Err(PyValueError::new_err("shape must be at least 1x1"));
        }
        Ok(PyMatrix {
            inner: numerics::Matrix::zeros(rows, cols),
        })
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        self.inner.shape()
    }

    fn tolist(&self) -> Vec<Vec<f64>> {
        (0..self.inner.rows())
            .map(|i| (0..self.inner.cols()).map(|j| self.inner.get(i, j)).collect())
            .collect()
    }

    fn get(&self, row: usize, col: usize) -> PyResult<f64> {
        if row >= self.inner.rows() || col >= self.inner.cols() {
            return Err(PyValueError::new_err("index out of bounds"));
        }
        Ok(self.inner.get(row, col))
    }

    fn fro_norm(&self) -> f64 {
        numerics::fro_norm(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Matrix({}x{})", self.inner.rows(), self.inner.cols())
    }
}

/// Thin SVD; returns `(u, singular_values, vt)`.
#[pyfunction]
fn svd(m: &PyMatrix) -> PyResult<(PyMatrix, Vec<f64>, PyMatrix)> {
    let dec = numerics::svd(&m.inner).map_err(err)?;
    Ok((
        PyMatrix { inner: dec.u },
        dec.singular_values,
        PyMatrix { inner: dec.vt },
    ))
}

#[pyfunction]
fn inner(a: &PyMatrix, b: &PyMatrix) -> PyResult<f64> {
    numerics::inner(&a.inner, &b.inner).map_err(err)
}

#[pyfunction]
fn soft_shrink(a: f64, tau: f64) -> PyResult<f64> {
    if tau < 0.0 {
        return Err(PyValueError::new_err("tau must be >= 0"));
    }
    Ok(prox::soft_shrink(a, tau))
}

#[pyfunction]
fn half_shrink(a: f64, tau: f64) -> PyResult<f64> {
    if tau < 0.0 {
        return Err(PyValueError::new_err("tau must be >= 0"));
    }
    Ok(prox::half_shrink(a, tau))
}

#[pyfunction]
fn soft_shrink_matrix(m: &PyMatrix, tau: f64) -> PyMatrix {
    PyMatrix {
        inner: prox::soft_shrink_matrix(&m.inner, tau),
    }
}

#[pyfunction]
fn half_shrink_matrix(m: &PyMatrix, tau: f64) -> PyMatrix {
    PyMatrix {
        inner: prox::half_shrink_matrix(&m.inner, tau),
    }
}

/// Singular-value thresholding.
#[pyfunction]
fn svt(m: &PyMatrix, tau: f64) -> PyResult<PyMatrix> {
    Ok(PyMatrix {
        inner: prox::svt(&m.inner, tau).map_err(err)?,
    })
}

#[pyfunction]
fn relerr(estimate: &PyMatrix, truth: &PyMatrix) -> PyResult<f64> {
    badmm::models::relerr(&estimate.inner, &truth.inner).map_err(err)
}

fn config_from_kwargs(kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<RpcaConfig> {
    let mut cfg = RpcaConfig::default();
    let Some(kwargs) = kwargs else {
        return Ok(cfg);
    };
    for (key, value) in kwargs.iter() {
        let key: String = key.extract()?;
        match key.as_str() {
            "lam" | "lambda_" => cfg.lambda = Some(value.extract()?),
            "mu" => cfg.mu = value.extract()?,
            "gamma1" => cfg.gamma1 = Some(value.extract()?),
            "gamma2" => cfg.gamma2 = Some(value.extract()?),
            "alpha0" => cfg.alpha0 = value.extract()?,
            "alpha_growth" => cfg.alpha_growth = value.extract()?,
            "alpha_max" => cfg.alpha_max = value.extract()?,
            "init_rank_fraction" => cfg.init_rank_fraction = value.extract()?,
            "relchg_threshold" => cfg.relchg_threshold = value.extract()?,
            "max_iterations" => cfg.max_iterations = value.extract()?,
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown config key '{other}'"
                )))
            }
        }
    }
    Ok(cfg)
}

/// Decomposes an observation into low-rank + sparse + denoised parts.
///
/// Returns `(l, s, t, info)` where `info` carries iteration count, final
/// relative change and final penalty.
#[pyfunction]
#[pyo3(signature = (m_obs, **kwargs))]
fn rpca_solve<'py>(
    py: Python<'py>,
    m_obs: &PyMatrix,
    kwargs: Option<&Bound<'py, PyDict>>,
) -> PyResult<(PyMatrix, PyMatrix, PyMatrix, Bound<'py, PyDict>)> {
    let cfg = config_from_kwargs(kwargs)?;
    let (state, trace) = rpca::rpca_solve(&m_obs.inner, &cfg).map_err(err)?;
    let info = PyDict::new(py);
    info.set_item("iterations", trace.len())?;
    info.set_item(
        "relchg",
        trace.records.last().map(|r| r.relchg).unwrap_or(f64::NAN),
    )?;
    info.set_item("alpha_final", state.alpha_current)?;
    info.set_item(
        "objective",
        trace
            .records
            .last()
            .map(|r| r.objective)
            .unwrap_or(f64::NAN),
    )?;
    Ok((
        PyMatrix { inner: state.l },
        PyMatrix { inner: state.s },
        PyMatrix { inner: state.t },
        info,
    ))
}

/// Relative errors of a decomposition against ground truth:
/// `(relErr_L, relErr_S)`.
#[pyfunction]
fn rpca_relerr(
    l: &PyMatrix,
    s: &PyMatrix,
    l_true: &PyMatrix,
    s_true: &PyMatrix,
) -> PyResult<(f64, f64)> {
    Ok((
        badmm::models::relerr(&l.inner, &l_true.inner).map_err(err)?,
        badmm::models::relerr(&s.inner, &s_true.inner).map_err(err)?,
    ))
}

/// Deterministic synthetic instance; returns `(m_obs, l_true, s_true)`.
#[pyfunction]
#[pyo3(signature = (m, rank, sparsity, magnitude=50.0, sigma=0.0, seed=0))]
fn gen_instance(
    m: usize,
    rank: usize,
    sparsity: f64,
    magnitude: f64,
    sigma: f64,
    seed: u64,
) -> PyResult<(PyMatrix, PyMatrix, PyMatrix)> {
    let inst = datagen::gen_instance(m, rank, sparsity, magnitude, sigma, seed).map_err(err)?;
    Ok((
        PyMatrix { inner: inst.m_obs },
        PyMatrix { inner: inst.l_true },
        PyMatrix { inner: inst.s_true },
    ))
}

#[pymodule]
fn badmm_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMatrix>()?;
    m.add_function(wrap_pyfunction!(svd, m)?)?;
    m.add_function(wrap_pyfunction!(inner, m)?)?;
    m.add_function(wrap_pyfunction!(soft_shrink, m)?)?;
    m.add_function(wrap_pyfunction!(half_shrink, m)?)?;
    m.add_function(wrap_pyfunction!(soft_shrink_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(half_shrink_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(svt, m)?)?;
    m.add_function(wrap_pyfunction!(relerr, m)?)?;
    m.add_function(wrap_pyfunction!(rpca_solve, m)?)?;
    m.add_function(wrap_pyfunction!(rpca_relerr, m)?)?;
    m.add_function(wrap_pyfunction!(gen_instance, m)?)?;
    Ok(())
}
