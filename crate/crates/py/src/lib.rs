//! Python bindings for `poisson-eiv`.
//!
//! Parameter and domain errors raise `ValueError`; estimation failures
//! (non-convergence, no root, degenerate moments) raise `RuntimeError`.

use poisson_eiv::sim::{
    generate_dataset, replication_rng, run_monte_carlo_with_threads, EstimatorSummary,
};
use poisson_eiv::{
    self as core, EivError, EivModel, FitOptions, ModelParams, NaiveEstimate, NuisanceMode,
    SimConfig,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: EivError) -> PyErr {
    match e {
        EivError::InvalidParameter(_)
        | EivError::Domain { .. }
        | EivError::InvalidData(_)
        | EivError::Config(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// A distribution law: `gamma(shape, rate)`, `normal(mean, variance)` or the
/// point mass at zero.
#[pyclass(frozen, from_py_object, name = "DistSpec", module = "poisson_eiv_py")]
#[derive(Clone, Copy)]
pub struct PyDistSpec {
    inner: core::DistSpec,
}

impl PyDistSpec {
    pub fn spec(&self) -> &core::DistSpec {
        &self.inner
    }
}

#[pymethods]
impl PyDistSpec {
    #[staticmethod]
    fn gamma(shape: f64, rate: f64) -> PyResult<Self> {
        core::DistSpec::gamma(shape, rate)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[staticmethod]
    fn normal(mean: f64, variance: f64) -> PyResult<Self> {
        core::DistSpec::normal(mean, variance)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[staticmethod]
    fn degenerate_zero() -> Self {
        Self {
            inner: core::DistSpec::degenerate_zero(),
        }
    }

    /// Parses `gamma:k:rate`, `normal:mu:sigma2` or `degenerate`.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        text.parse().map(|inner| Self { inner }).map_err(to_py)
    }

    /// Open interval `(lo, hi)` on which the MGF is finite.
    fn domain(&self) -> (f64, f64) {
        let d = self.inner.mgf_domain();
        (d.lo, d.hi)
    }

    fn mgf(&self, t: f64) -> PyResult<f64> {
        self.inner.mgf(t).map_err(to_py)
    }

    fn cgf(&self, t: f64) -> PyResult<f64> {
        self.inner.cgf(t).map_err(to_py)
    }

    fn cgf_prime(&self, t: f64) -> PyResult<f64> {
        self.inner.cgf_prime(t).map_err(to_py)
    }

    fn cgf_double_prime(&self, t: f64) -> PyResult<f64> {
        self.inner.cgf_double_prime(t).map_err(to_py)
    }

    #[getter]
    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    #[getter]
    fn variance(&self) -> f64 {
        self.inner.variance()
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("DistSpec.parse('{}')", self.inner)
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }
}

/// Result of the naive Newton fit.
#[pyclass(frozen, get_all, name = "NaiveFit", module = "poisson_eiv_py")]
pub struct PyNaiveFit {
    beta0: f64,
    beta1: f64,
    iterations: usize,
    converged: bool,
    score_norm: f64,
}

#[pymethods]
impl PyNaiveFit {
    fn __repr__(&self) -> String {
        format!(
            "NaiveFit(beta0={}, beta1={}, iterations={}, converged={}, score_norm={:e})",
            self.beta0,
            self.beta1,
            self.iterations,
            if self.converged { "True" } else { "False" },
            self.score_norm
        )
    }
}

impl From<NaiveEstimate> for PyNaiveFit {
    fn from(e: NaiveEstimate) -> Self {
        Self {
            beta0: e.params.beta0,
            beta1: e.params.beta1,
            iterations: e.iterations,
            converged: e.converged,
            score_norm: e.score_norm,
        }
    }
}

fn model(x: &PyDistSpec, u: &PyDistSpec, beta0: f64, beta1: f64) -> PyResult<EivModel> {
    let beta = ModelParams::new(beta0, beta1).map_err(to_py)?;
    EivModel::new(x.inner, u.inner, beta).map_err(to_py)
}

/// Fits the Poisson regression of `y` on the observed covariate `w`.
#[pyfunction]
#[pyo3(signature = (y, w, tol = core::naive::DEFAULT_TOL, max_iter = core::naive::DEFAULT_MAX_ITER))]
fn fit_naive(
    py: Python<'_>,
    y: Vec<u64>,
    w: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> PyResult<PyNaiveFit> {
    let data = core::Dataset::new(y, w).map_err(to_py)?;
    let opts = FitOptions {
        init: None,
        tol,
        max_iter,
    };
    py.detach(|| core::fit_naive(&data, &opts))
        .map(Into::into)
        .map_err(to_py)
}

/// Limit `b1` of the naive slope when the true slope is `beta1`.
#[pyfunction]
fn forward_map_g(x: PyDistSpec, u: PyDistSpec, beta1: f64) -> PyResult<f64> {
    core::forward_map_g(&x.inner, &u.inner, beta1).map_err(to_py)
}

/// True slope whose naive limit is `b1`.
#[pyfunction]
fn inverse_map_h(x: PyDistSpec, u: PyDistSpec, b1: f64) -> PyResult<f64> {
    core::inverse_map_h(&x.inner, &u.inner, b1).map_err(to_py)
}

/// Naive limit, asymptotic bias and asymptotic MSE as a dict of 2-tuples.
#[pyfunction]
fn naive_limit<'py>(
    py: Python<'py>,
    x: PyDistSpec,
    u: PyDistSpec,
    beta0: f64,
    beta1: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let r = core::naive_limit(&model(&x, &u, beta0, beta1)?).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("b", (r.b.beta0, r.b.beta1))?;
    d.set_item("bias", (r.bias[0], r.bias[1]))?;
    d.set_item("asy_mse", (r.asy_mse[0], r.asy_mse[1]))?;
    Ok(d)
}

/// Corrected estimate `(beta0, beta1)` from a naive estimate and the laws of X and U.
#[pyfunction]
fn correct_estimate(beta0: f64, beta1: f64, x: PyDistSpec, u: PyDistSpec) -> PyResult<(f64, f64)> {
    let naive = NaiveEstimate {
        params: ModelParams::new(beta0, beta1).map_err(to_py)?,
        iterations: 0,
        converged: true,
        score_norm: 0.0,
    };
    let c = core::correct_estimate(&naive, &x.inner, &u.inner).map_err(to_py)?;
    Ok((c.params.beta0, c.params.beta1))
}

/// Moment estimates `(k, rate)` of a Gamma covariate under Normal error.
#[pyfunction]
fn estimate_nuisance_normal_error(w: Vec<f64>, sigma2: f64) -> PyResult<(f64, f64)> {
    core::estimate_nuisance_normal_error(&w, sigma2).map_err(to_py)
}

/// Moment estimates `(k1, rate)` of a Gamma covariate under Gamma(k2, rate) error.
#[pyfunction]
fn estimate_nuisance_gamma_error(w: Vec<f64>, k2: f64) -> PyResult<(f64, f64)> {
    core::estimate_nuisance_gamma_error(&w, k2).map_err(to_py)
}

/// Draws `(y, w)` of length `n` from the model, reproducibly in `seed`.
#[pyfunction]
fn simulate_dataset(
    x: PyDistSpec,
    u: PyDistSpec,
    beta0: f64,
    beta1: f64,
    n: usize,
    seed: u64,
) -> PyResult<(Vec<u64>, Vec<f64>)> {
    let m = model(&x, &u, beta0, beta1)?;
    let d = generate_dataset(&m, n, &mut replication_rng(seed, 0)).map_err(to_py)?;
    Ok((d.y().to_vec(), d.w().to_vec()))
}

fn summary<'py>(py: Python<'py>, s: &EstimatorSummary) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("bias", (s.bias[0], s.bias[1]))?;
    d.set_item(
        "mse",
        ((s.mse[0][0], s.mse[0][1]), (s.mse[1][0], s.mse[1][1])),
    )?;
    d.set_item("mc_std_error", (s.mc_std_error[0], s.mc_std_error[1]))?;
    Ok(d)
}

/// Monte Carlo study of the naive and corrected estimators.
///
/// `nuisance` is `"known"` or `"moment"`; in moment mode `error_param` is the
/// known error variance (Normal) or shape (Gamma), defaulting to the one in `u`.
#[pyfunction]
#[pyo3(signature = (x, u, beta0, beta1, n, mc, seed, nuisance = "moment", error_param = None, threads = 0))]
#[allow(clippy::too_many_arguments)]
fn run_monte_carlo<'py>(
    py: Python<'py>,
    x: PyDistSpec,
    u: PyDistSpec,
    beta0: f64,
    beta1: f64,
    n: usize,
    mc: usize,
    seed: u64,
    nuisance: &str,
    error_param: Option<f64>,
    threads: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let nuisance_mode = match nuisance {
        "known" => NuisanceMode::Known,
        "moment" => NuisanceMode::Moment,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown nuisance mode {other:?}"
            )))
        }
    };
    let error_known_param = match nuisance_mode {
        NuisanceMode::Known => None,
        NuisanceMode::Moment => {
            error_param.or_else(|| core::scenario::default_error_param(&u.inner))
        }
    };
    let config = SimConfig {
        model: model(&x, &u, beta0, beta1)?,
        n,
        mc,
        seed,
        nuisance_mode,
        error_known_param,
    };
    let threads = if threads == 0 {
        std::thread::available_parallelism().map_or(1, usize::from)
    } else {
        threads
    };
    let r = py
        .detach(|| run_monte_carlo_with_threads(&config, threads))
        .map_err(to_py)?;

    let theory = PyDict::new(py);
    theory.set_item("b", (r.theory.b.beta0, r.theory.b.beta1))?;
    theory.set_item("bias", (r.theory.bias[0], r.theory.bias[1]))?;
    theory.set_item("asy_mse", (r.theory.asy_mse[0], r.theory.asy_mse[1]))?;

    let d = PyDict::new(py);
    d.set_item("naive", summary(py, &r.naive)?)?;
    d.set_item("corrected", summary(py, &r.corrected)?)?;
    d.set_item("theory", theory)?;
    d.set_item("successful_replications", r.successful_replications)?;
    d.set_item("failed_replications", r.failed_replications)?;
    Ok(d)
}

#[pymodule]
pub fn poisson_eiv_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDistSpec>()?;
    m.add_class::<PyNaiveFit>()?;
    m.add_function(wrap_pyfunction!(fit_naive, m)?)?;
    m.add_function(wrap_pyfunction!(forward_map_g, m)?)?;
    m.add_function(wrap_pyfunction!(inverse_map_h, m)?)?;
    m.add_function(wrap_pyfunction!(naive_limit, m)?)?;
    m.add_function(wrap_pyfunction!(correct_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_nuisance_normal_error, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_nuisance_gamma_error, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(run_monte_carlo, m)?)?;
    Ok(())
}
