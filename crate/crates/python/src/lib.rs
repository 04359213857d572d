//! Python bindings for `compressed_tucker`.
//!
//! Matrices cross the boundary as lists of rows, tensors as the [`Tensor`]
//! class (flat data in first-index-fastest order). Modes are 0-based here, as
//! in the Rust library. Run reports and verification reports are returned as
//! plain dicts.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use compressed_tucker::bench;
use compressed_tucker::decompose::{self as dec, DecomposerConfig, Init, Method};
use compressed_tucker::embeddings::EmbeddingKind;
use compressed_tucker::io;
use compressed_tucker::verify::{run_suite, Suite, SuiteOptions};
use compressed_tucker::{DenseTensor, Error, Matrix, TuckerDecomposition};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<Matrix> {
    Matrix::from_rows(&rows).map_err(to_py)
}

fn to_dict<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Dense real tensor.
#[pyclass(name = "Tensor", module = "ctucker", skip_from_py_object)]
pub struct Tensor {
    inner: DenseTensor,
}

#[pymethods]
impl Tensor {
    #[new]
    fn new(shape: Vec<usize>, data: Vec<f64>) -> PyResult<Self> {
        DenseTensor::new(shape, data).map(|inner| Tensor { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn zeros(shape: Vec<usize>) -> PyResult<Self> {
        DenseTensor::zeros(shape).map(|inner| Tensor { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        io::load_tensor(path).map(|inner| Tensor { inner }).map_err(to_py)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        io::save_tensor(path, &self.inner).map_err(to_py)
    }

    #[getter]
    fn shape(&self) -> Vec<usize> {
        self.inner.shape().to_vec()
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order()
    }

    /// Flat data, first index fastest.
    fn data(&self) -> Vec<f64> {
        self.inner.data().to_vec()
    }

    fn get(&self, index: Vec<usize>) -> PyResult<f64> {
        if index.len() != self.inner.order() || index.iter().zip(self.inner.shape()).any(|(i, n)| i >= n) {
            return Err(PyValueError::new_err(format!("index {index:?} out of bounds for shape {:?}", self.inner.shape())));
        }
        Ok(self.inner.get(&index))
    }

    fn norm(&self) -> f64 {
        self.inner.norm()
    }

    fn inner(&self, other: &Tensor) -> PyResult<f64> {
        self.inner.inner(&other.inner).map_err(to_py)
    }

    fn matricize(&self, mode: usize) -> PyResult<Vec<Vec<f64>>> {
        self.inner.matricize(mode).map(|m| m.to_rows()).map_err(to_py)
    }

    fn mode_multiply(&self, b: Vec<Vec<f64>>, mode: usize) -> PyResult<Tensor> {
        let b = matrix(b)?;
        self.inner.mode_multiply(&b, mode).map(|inner| Tensor { inner }).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Tensor(shape={:?}, norm={:.6e})", self.inner.shape(), self.inner.norm())
    }
}

/// Tucker model: a core tensor and one factor matrix per mode.
#[pyclass(name = "Tucker", module = "ctucker", skip_from_py_object)]
pub struct Tucker {
    inner: TuckerDecomposition,
}

#[pymethods]
impl Tucker {
    #[new]
    fn new(core: &Tensor, factors: Vec<Vec<Vec<f64>>>) -> PyResult<Self> {
        let factors = factors.into_iter().map(matrix).collect::<PyResult<Vec<_>>>()?;
        TuckerDecomposition::new(core.inner.clone(), factors).map(|inner| Tucker { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        io::load_decomposition(path).map(|inner| Tucker { inner }).map_err(to_py)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        io::save_decomposition(path, &self.inner).map_err(to_py)
    }

    #[getter]
    fn core(&self) -> Tensor {
        Tensor { inner: self.inner.core().clone() }
    }

    #[getter]
    fn factors(&self) -> Vec<Vec<Vec<f64>>> {
        self.inner.factors().iter().map(Matrix::to_rows).collect()
    }

    #[getter]
    fn ranks(&self) -> Vec<usize> {
        self.inner.ranks().to_vec()
    }

    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.inner.dims()
    }

    fn is_orthogonal(&self) -> bool {
        self.inner.is_orthogonal()
    }

    fn reconstruct(&self) -> PyResult<Tensor> {
        self.inner.reconstruct().map(|inner| Tensor { inner }).map_err(to_py)
    }

    /// Per-mode coherences.
    fn coherence(&self) -> PyResult<Vec<f64>> {
        self.inner.coherence().map(|c| c.per_mode).map_err(to_py)
    }

    /// Replaces factor `mode` by `b @ factor`.
    fn apply_mode_map(&self, b: Vec<Vec<f64>>, mode: usize) -> PyResult<Tucker> {
        let b = matrix(b)?;
        self.inner.apply_mode_map(&b, mode).map(|inner| Tucker { inner }).map_err(to_py)
    }

    fn norm_via_gram(&self, b: Vec<Vec<f64>>, mode: usize) -> PyResult<f64> {
        let b = matrix(b)?;
        self.inner.norm_via_gram(&b, mode).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Tucker(dims={:?}, ranks={:?})", self.inner.dims(), self.inner.ranks())
    }
}

/// Random rank-`ranks` tensor with orthonormal factors plus Gaussian noise of standard deviation `noise`.
#[pyfunction]
#[pyo3(signature = (dims, ranks, noise = 0.0, seed = 0))]
fn synth(dims: Vec<usize>, ranks: Vec<usize>, noise: f64, seed: u64) -> PyResult<Tensor> {
    bench::synth_tensor(&dims, &ranks, noise, seed).map(|inner| Tensor { inner }).map_err(to_py)
}

/// Runs one decomposition and returns `(Tucker, report_dict)`.
#[pyfunction]
#[pyo3(signature = (x, ranks, method = "hooi-re", dr = 0.5, compress_modes = None, tol = 1e-5, max_iters = 100, seed = 0, init = "hosvd"))]
#[allow(clippy::too_many_arguments)]
fn decompose<'py>(
    py: Python<'py>,
    x: &Tensor,
    ranks: Vec<usize>,
    method: &str,
    dr: f64,
    compress_modes: Option<Vec<usize>>,
    tol: f64,
    max_iters: usize,
    seed: u64,
    init: &str,
) -> PyResult<(Tucker, Bound<'py, PyAny>)> {
    let method: Method = method.parse().map_err(to_py)?;
    let init: Init = init.parse().map_err(to_py)?;
    let mut cfg = DecomposerConfig::new(method, ranks)
        .with_dr(dr)
        .with_rel_tol(tol)
        .with_max_iters(max_iters)
        .with_seed(seed)
        .with_init(init);
    if let Some(modes) = compress_modes {
        cfg = cfg.with_compress_modes(modes);
    }
    let (t, report) = py.detach(|| dec::decompose(&x.inner, &cfg)).map_err(to_py)?;
    Ok((Tucker { inner: t }, to_dict(py, &report)?))
}

/// `‖x − t.reconstruct()‖ / ‖x‖`.
#[pyfunction]
fn relative_error(x: &Tensor, t: &Tucker) -> PyResult<f64> {
    dec::relative_error(&x.inner, &t.inner).map_err(to_py)
}

#[pyfunction]
fn matricize(x: &Tensor, mode: usize) -> PyResult<Vec<Vec<f64>>> {
    x.matricize(mode)
}

#[pyfunction]
fn mode_multiply(x: &Tensor, b: Vec<Vec<f64>>, mode: usize) -> PyResult<Tensor> {
    x.mode_multiply(b, mode)
}

/// Runs a verification suite (`lemma21`, `lemma-a`, `prop1`, `th1`, `th4`) and returns its report.
#[pyfunction]
#[pyo3(signature = (suite, trials = 500, eps = 0.5, eta = 0.1, seed = 1, family = "gaussian"))]
fn verify<'py>(
    py: Python<'py>,
    suite: &str,
    trials: usize,
    eps: f64,
    eta: f64,
    seed: u64,
    family: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let suite: Suite = suite.parse().map_err(to_py)?;
    let family: EmbeddingKind = family.parse().map_err(to_py)?;
    let opts = SuiteOptions {
        trials,
        eps,
        eta,
        seed,
        family,
    };
    let report = py.detach(|| run_suite(suite, &opts)).map_err(to_py)?;
    to_dict(py, &report)
}

#[pymodule]
fn ctucker(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Tensor>()?;
    m.add_class::<Tucker>()?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(relative_error, m)?)?;
    m.add_function(wrap_pyfunction!(matricize, m)?)?;
    m.add_function(wrap_pyfunction!(mode_multiply, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add("METHODS", Method::ALL.iter().map(|m| m.as_str()).collect::<Vec<_>>())?;
    Ok(())
}
