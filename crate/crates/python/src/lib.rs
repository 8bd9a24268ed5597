//! Python bindings: the `Algebra` type, the fixture constructors, and the
//! search and structure operations. Reports come back as plain dicts.

use std::path::PathBuf;

use nalgebra::DMatrix;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use metralg::constructions;
use metralg::report::{self, AnalysisConfig};
use metralg::search::{self, SearchConfig};
use metralg::structure::{self, IdentityTolerances};
use metralg::{io, AlgebraSpec, Error, Vector};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn square(rows: &[Vec<f64>], what: &str) -> PyResult<DMatrix<f64>> {
    let m = rows.len();
    if rows.iter().any(|r| r.len() != m) {
        return Err(PyValueError::new_err(format!("{what} must be a square matrix")));
    }
    Ok(DMatrix::from_fn(m, m, |i, j| rows[i][j]))
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn search_config(seed: u64, multistart: Option<usize>) -> SearchConfig {
    SearchConfig {
        seed,
        multistart_count: multistart,
        ..SearchConfig::default()
    }
}

/// A commutative algebra with a positive definite associative form.
#[pyclass(name = "Algebra", module = "pymetralg", frozen)]
struct PyAlgebra {
    inner: AlgebraSpec,
}

impl PyAlgebra {
    fn vector(&self, x: Vec<f64>) -> PyResult<Vector> {
        if x.len() != self.inner.dim() {
            return Err(py_err(Error::DimensionMismatch {
                expected: self.inner.dim(),
                got: x.len(),
            }));
        }
        Ok(Vector::from_vec(x))
    }
}

#[pymethods]
impl PyAlgebra {
    /// Flat row-major structure constants (n³) and Gram matrix (n²).
    #[new]
    #[pyo3(signature = (dim, structure, gram, label = "algebra".to_string()))]
    fn new(dim: usize, structure: Vec<f64>, gram: Vec<f64>, label: String) -> PyResult<Self> {
        if gram.len() != dim * dim {
            return Err(py_err(Error::ShapeMismatch {
                field: "gram",
                expected: dim * dim,
                got: gram.len(),
            }));
        }
        let g = DMatrix::from_row_slice(dim, dim, &gram);
        let inner = AlgebraSpec::new(label, dim, structure, g).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn spin_factor(f: Vec<Vec<f64>>) -> PyResult<Self> {
        let f = square(&f, "f")?;
        Ok(Self {
            inner: constructions::spin_factor(&f).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn sym_jordan(n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: constructions::sym_jordan(n).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn rsquare() -> Self {
        Self {
            inner: constructions::rsquare(),
        }
    }

    #[staticmethod]
    fn zero(n: usize) -> Self {
        Self {
            inner: constructions::zero_algebra(n),
        }
    }

    #[staticmethod]
    #[pyo3(signature = (n, seed = 0))]
    fn random(n: usize, seed: u64) -> Self {
        Self {
            inner: constructions::random_metrised(n, seed),
        }
    }

    #[staticmethod]
    fn direct_sum(a: &PyAlgebra, b: &PyAlgebra) -> Self {
        Self {
            inner: constructions::direct_sum(&a.inner, &b.inner),
        }
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: io::load(&path).map_err(py_err)?.algebra,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: io::from_json(text).map_err(py_err)?.algebra,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        io::save(&self.inner, &path).map_err(py_err)
    }

    fn to_json(&self) -> PyResult<String> {
        io::to_json(&self.inner, Default::default()).map_err(py_err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label().to_string()
    }

    #[getter]
    fn structure(&self) -> Vec<f64> {
        self.inner.structure().to_vec()
    }

    #[getter]
    fn gram(&self) -> Vec<Vec<f64>> {
        rows(self.inner.gram())
    }

    fn multiply(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<Vec<f64>> {
        let p = self.inner.multiply(&self.vector(x)?, &self.vector(y)?).map_err(py_err)?;
        Ok(p.iter().copied().collect())
    }

    fn inner(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        self.inner.inner(&self.vector(x)?, &self.vector(y)?).map_err(py_err)
    }

    fn cubic_form(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.cubic_form(&self.vector(x)?).map_err(py_err)
    }

    fn left_mult_matrix(&self, x: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        Ok(rows(&self.inner.left_mult_matrix(&self.vector(x)?).map_err(py_err)?))
    }

    #[pyo3(signature = (tol = metralg::algebra::DEFAULT_AXIOM_TOL))]
    fn validate<'py>(&self, py: Python<'py>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.validate(tol))
    }

    #[pyo3(signature = (tol = metralg::algebra::DEFAULT_AXIOM_TOL))]
    fn find_unit(&self, tol: f64) -> Option<Vec<f64>> {
        self.inner.find_unit(tol).map(|e| e.iter().copied().collect())
    }

    /// Copy with the form rescaled so shortest idempotents have unit length,
    /// and the factor applied.
    #[pyo3(signature = (seed = 0, multistart = None))]
    fn normalized(&self, seed: u64, multistart: Option<usize>) -> PyResult<(PyAlgebra, f64)> {
        let (a, k) = search::normalize(&self.inner, &search_config(seed, multistart)).map_err(py_err)?;
        Ok((PyAlgebra { inner: a }, k))
    }

    fn __repr__(&self) -> String {
        format!("Algebra(label={:?}, dim={})", self.inner.label(), self.inner.dim())
    }
}

#[pyfunction]
#[pyo3(signature = (a, seed = 0, multistart = None))]
fn enumerate_idempotents<'py>(
    py: Python<'py>,
    a: &PyAlgebra,
    seed: u64,
    multistart: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = search_config(seed, multistart);
    let en = py.detach(|| search::enumerate_idempotents(&a.inner, &cfg)).map_err(py_err)?;
    to_py(py, &en)
}

#[pyfunction]
#[pyo3(signature = (a, seed = 0, multistart = None))]
fn minimality_test<'py>(
    py: Python<'py>,
    a: &PyAlgebra,
    seed: u64,
    multistart: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = search_config(seed, multistart);
    let rep = py
        .detach(|| {
            let en = search::enumerate_idempotents(&a.inner, &cfg)?;
            structure::minimality_test(&a.inner, &en, &cfg, &IdentityTolerances::default())
        })
        .map_err(py_err)?;
    to_py(py, &rep)
}

#[pyfunction]
#[pyo3(signature = (a, seed = 0, multistart = None, samples = 1000))]
fn build_isomorphism<'py>(
    py: Python<'py>,
    a: &PyAlgebra,
    seed: u64,
    multistart: Option<usize>,
    samples: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = search_config(seed, multistart);
    let rep = py
        .detach(|| {
            let en = search::enumerate_idempotents(&a.inner, &cfg)?;
            structure::build_isomorphism(&a.inner, &en, &cfg, &IdentityTolerances::default(), samples)
        })
        .map_err(py_err)?;
    to_py(py, &rep)
}

/// The full pipeline; the same report the CLI writes with `--format machine`.
#[pyfunction]
#[pyo3(signature = (a, seed = 0, multistart = None, samples = 1000, strict = false))]
fn analyze<'py>(
    py: Python<'py>,
    a: &PyAlgebra,
    seed: u64,
    multistart: Option<usize>,
    samples: usize,
    strict: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = AnalysisConfig {
        search: search_config(seed, multistart),
        samples,
        ..AnalysisConfig::default()
    };
    if strict {
        cfg = cfg.strict();
    }
    let rep = py.detach(|| report::analyze(&a.inner, &cfg));
    to_py(py, &rep)
}

#[pymodule]
fn pymetralg(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyAlgebra>()?;
    m.add_function(wrap_pyfunction!(enumerate_idempotents, m)?)?;
    m.add_function(wrap_pyfunction!(minimality_test, m)?)?;
    m.add_function(wrap_pyfunction!(build_isomorphism, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    Ok(())
}
