//! Python bindings. Structured results cross the boundary as JSON and come
//! back as plain dicts and lists.

use ipmbalance::cem::{self, CoarseningSpec};
use ipmbalance::data::{Dataset as CoreDataset, EmpiricalPair};
use ipmbalance::kernel::KernelSpec;
use ipmbalance::matching::MatchedSets;
use ipmbalance::oracle::ClassKind;
use ipmbalance::propensity::{self, LdaModel as CoreLda};
use ipmbalance::report::AnalysisConfig;
use ipmbalance::{bounds, io, ipm, oracle, report, sim, Error};
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

fn py_err(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::InvalidInput(_) | Error::Parse { .. } | Error::TooLarge(_) | Error::Unsupported(_) => PyValueError::new_err(msg),
        Error::Numerical(_) | Error::SingularCovariance { .. } | Error::Unreachable { .. } => PyArithmeticError::new_err(msg),
        Error::Io(_) => PyOSError::new_err(msg),
        _ => PyRuntimeError::new_err(msg),
    }
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<PyObject> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn from_py<T: serde::de::DeserializeOwned>(py: Python<'_>, obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = match obj.extract::<String>() {
        Ok(s) => s,
        Err(_) => py.import("json")?.call_method1("dumps", (obj,))?.extract()?,
    };
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn kernel_spec(kind: &str, sigma: f64, degree: u32, offset: f64) -> PyResult<KernelSpec> {
    match kind {
        "gaussian" => KernelSpec::gaussian(sigma),
        "poly" | "polynomial" => KernelSpec::polynomial(degree, offset),
        "laplacian" => KernelSpec::laplacian(sigma),
        other => return Err(PyValueError::new_err(format!("unknown kernel {other:?}"))),
    }
    .map_err(py_err)
}

/// Treated/control covariate data with outcomes.
#[pyclass(frozen)]
#[derive(Clone)]
struct Dataset {
    inner: CoreDataset,
}

#[pymethods]
impl Dataset {
    /// Builds a dataset from control and treated covariate rows (outcomes are zero).
    #[staticmethod]
    fn from_groups(group0: Vec<Vec<f64>>, group1: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Dataset { inner: CoreDataset::from_groups(&group0, &group1).map_err(py_err)? })
    }

    /// Parses `y,t,z1,...,zp` CSV text.
    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        Ok(Dataset { inner: io::parse_csv(text).map_err(py_err)? })
    }

    fn to_csv(&self) -> String {
        io::to_csv_string(&self.inner)
    }

    /// Min-max rescaling of every covariate onto [0, 1] using both groups.
    fn normalized(&self) -> Self {
        Dataset { inner: self.inner.normalize().0 }
    }

    #[getter]
    fn n0(&self) -> usize {
        self.inner.n0()
    }

    #[getter]
    fn n1(&self) -> usize {
        self.inner.n1()
    }

    #[getter]
    fn p(&self) -> usize {
        self.inner.p()
    }

    fn __repr__(&self) -> String {
        format!("Dataset(n0={}, n1={}, p={})", self.inner.n0(), self.inner.n1(), self.inner.p())
    }
}

/// A fitted linear discriminant.
#[pyclass(frozen)]
struct LdaModel {
    inner: CoreLda,
}

#[pymethods]
impl LdaModel {
    #[getter]
    fn w(&self) -> Vec<f64> {
        self.inner.w.clone()
    }

    #[getter]
    fn ridge(&self) -> f64 {
        self.inner.ridge
    }

    fn logit_score(&self, z: Vec<f64>) -> PyResult<f64> {
        propensity::logit_score(&self.inner, &z).map_err(py_err)
    }

    fn full_logit(&self, z: Vec<f64>) -> PyResult<f64> {
        if z.len() != self.inner.p() {
            return Err(PyValueError::new_err("dimension mismatch"));
        }
        Ok(self.inner.full_logit(&z))
    }
}

#[pyfunction]
#[pyo3(signature = (delta, D, C, n0, n1))]
#[allow(non_snake_case)]
fn bound(delta: f64, D: f64, C: f64, n0: usize, n1: usize) -> PyResult<f64> {
    bounds::bound(delta, D, C, n0, n1).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (target, D, C, n0, n1))]
#[allow(non_snake_case)]
fn invert_bound(py: Python<'_>, target: f64, D: f64, C: f64, n0: usize, n1: usize) -> PyResult<PyObject> {
    to_py(py, &bounds::invert_bound(target, D, C, n0, n1).map_err(py_err)?)
}

#[pyfunction]
fn vc_to_covering_exponent(v: u32) -> PyResult<f64> {
    bounds::vc_to_covering_exponent(v).map_err(py_err)
}

fn coarsening(cuts: Vec<Vec<f64>>) -> PyResult<CoarseningSpec> {
    CoarseningSpec::new(cuts).map_err(py_err)
}

/// Coarsened exact matching; returns strata, weights and discards.
#[pyfunction]
fn cem_match(py: Python<'_>, data: &Dataset, cuts: Vec<Vec<f64>>) -> PyResult<PyObject> {
    to_py(py, &cem::cem_match(&data.inner, &coarsening(cuts)?).map_err(py_err)?)
}

/// Per-covariate weighted mean difference after coarsened exact matching.
#[pyfunction]
fn cem_delta(data: &Dataset, cuts: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    let matched = cem::cem_match(&data.inner, &coarsening(cuts)?).map_err(py_err)?;
    cem::cem_delta(&data.inner, &matched).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (data, ridge=None))]
fn lda_fit(data: &Dataset, ridge: Option<f64>) -> PyResult<LdaModel> {
    let fitted = match ridge {
        Some(r) => propensity::lda_fit(&data.inner, r),
        None => propensity::lda_fit_auto(&data.inner),
    };
    Ok(LdaModel { inner: fitted.map_err(py_err)? })
}

/// Greedy nearest-score matching of `k` distinct controls per treated unit.
#[pyfunction]
fn ratio_match(py: Python<'_>, scores0: Vec<f64>, scores1: Vec<f64>, k: usize) -> PyResult<PyObject> {
    to_py(py, &propensity::ratio_match(&scores0, &scores1, k).map_err(py_err)?)
}

/// Fits the discriminant, ratio-matches on its score and returns the logit-scale imbalance.
#[pyfunction]
#[pyo3(signature = (data, k, ridge=None))]
fn propensity_delta(py: Python<'_>, data: &Dataset, k: usize, ridge: Option<f64>) -> PyResult<PyObject> {
    let model = lda_fit(data, ridge)?.inner;
    let matched = propensity::propensity_match(&data.inner, &model, k).map_err(py_err)?;
    to_py(py, &propensity::propensity_delta(&model, &data.inner, &matched).map_err(py_err)?)
}

/// Kernel MMD between the full control and treated samples.
#[pyfunction]
#[pyo3(signature = (data, kernel="gaussian", sigma=1.0, degree=2, offset=1.0))]
fn kernel_delta(data: &Dataset, kernel: &str, sigma: f64, degree: u32, offset: f64) -> PyResult<f64> {
    let spec = kernel_spec(kernel, sigma, degree, offset)?;
    ipmbalance::kernel::kernel_delta(&data.inner, &MatchedSets::full(&data.inner), &spec).map_err(py_err)
}

/// Kernel MMD between two point clouds.
#[pyfunction]
#[pyo3(signature = (group0, group1, kernel="gaussian", sigma=1.0, degree=2, offset=1.0))]
fn gamma_mmd(group0: Vec<Vec<f64>>, group1: Vec<Vec<f64>>, kernel: &str, sigma: f64, degree: u32, offset: f64) -> PyResult<f64> {
    let spec = kernel_spec(kernel, sigma, degree, offset)?;
    let pair = EmpiricalPair::new(group0, group1).map_err(py_err)?;
    ipm::gamma_mmd(&pair, &spec).map_err(py_err)
}

/// Whether `class` ("hyperplane" or "partition" with parameter p or R) shatters `points`.
#[pyfunction]
fn shatter_check(class: &str, param: usize, points: Vec<Vec<f64>>) -> PyResult<bool> {
    let kind = match class {
        "hyperplane" => ClassKind::Hyperplane(param),
        "partition" => ClassKind::Partition(param),
        other => return Err(PyValueError::new_err(format!("unknown class {other:?}"))),
    };
    oracle::shatter_check(kind, &points).map_err(py_err)
}

/// Runs a Monte Carlo scenario (dict or JSON string) and returns the tail curve.
#[pyfunction]
fn run_experiment(py: Python<'_>, scenario: &Bound<'_, PyAny>) -> PyResult<PyObject> {
    let spec: sim::ScenarioSpec = from_py(py, scenario)?;
    let curve = py.allow_threads(|| sim::run_experiment(&spec)).map_err(py_err)?;
    let out = to_py(py, &curve)?;
    let dict = out.bind(py).downcast::<PyDict>()?;
    dict.set_item("dominance_holds", curve.dominance_holds())?;
    dict.set_item("csv", curve.to_csv())?;
    Ok(out)
}

/// Balance report for a dataset under an analysis config (dict or JSON string).
#[pyfunction]
fn run_balance(py: Python<'_>, data: &Dataset, config: &Bound<'_, PyAny>) -> PyResult<PyObject> {
    let config: AnalysisConfig = from_py(py, config)?;
    to_py(py, &report::run_balance(&data.inner, &config).map_err(py_err)?)
}

#[pymodule]
#[pyo3(name = "ipmbalance")]
fn ipmbalance_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Dataset>()?;
    m.add_class::<LdaModel>()?;
    m.add_function(wrap_pyfunction!(bound, m)?)?;
    m.add_function(wrap_pyfunction!(invert_bound, m)?)?;
    m.add_function(wrap_pyfunction!(vc_to_covering_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(cem_match, m)?)?;
    m.add_function(wrap_pyfunction!(cem_delta, m)?)?;
    m.add_function(wrap_pyfunction!(lda_fit, m)?)?;
    m.add_function(wrap_pyfunction!(ratio_match, m)?)?;
    m.add_function(wrap_pyfunction!(propensity_delta, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_delta, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_mmd, m)?)?;
    m.add_function(wrap_pyfunction!(shatter_check, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(run_balance, m)?)?;
    Ok(())
}
