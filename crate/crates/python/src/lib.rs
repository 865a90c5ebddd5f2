//! Python bindings. Problems and coefficients cross the boundary as the same
//! JSON descriptors the CLI reads; reports come back as plain dicts.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use relosc_core::coefficients::Coefficients;
use relosc_core::error::Error;
use relosc_core::experiments::{self as ex, CheckOptions};
use relosc_core::floquet::{self, BandOptions};
use relosc_core::problem::{BoundaryCondition, SLProblem, TruncationSchedule};
use relosc_core::prufer::PruferTrajectory;
use relosc_core::spectra;
use relosc_core::wronskian::{self, Psi, SolutionSpec};
use serde::Serialize;

fn err(e: Error) -> PyErr {
    match e {
        Error::InvalidDescriptor(_) | Error::Precondition(_) | Error::NonPositiveCoefficient { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<PyObject> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn psi(kind: &str) -> PyResult<Psi> {
    match kind {
        "minus" | "-" => Ok(Psi::Minus),
        "plus" | "+" => Ok(Psi::Plus),
        _ => Err(PyValueError::new_err(format!("psi must be 'minus' or 'plus', got {kind:?}"))),
    }
}

fn schedule(p: &SLProblem, xmax: Option<f64>) -> PyResult<TruncationSchedule> {
    match xmax {
        Some(x) => {
            let s = TruncationSchedule::geometric(p.a(), x / 16.0, 2.0, 4, 3);
            s.validate(p.a(), p.b()).map_err(err)?;
            Ok(s)
        }
        None => p.schedule().map_err(err),
    }
}

fn options(tol: f64, eps_pi: f64) -> CheckOptions {
    CheckOptions { tol, eps_pi, ..CheckOptions::default() }
}

/// Coefficient descriptor `(p, q, r)`.
#[pyclass(name = "Coefficients", module = "relosc")]
#[derive(Clone)]
pub struct PyCoefficients {
    inner: Coefficients,
}

#[pymethods]
impl PyCoefficients {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let c: Coefficients = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        c.validate().map_err(err)?;
        Ok(PyCoefficients { inner: c })
    }

    #[staticmethod]
    fn constant(q: f64) -> Self {
        PyCoefficients { inner: Coefficients::constant_potential(q) }
    }

    #[staticmethod]
    fn piecewise(breakpoints: Vec<f64>, q: Vec<f64>) -> PyResult<Self> {
        let c = Coefficients::piecewise_potential(breakpoints, q);
        c.validate().map_err(err)?;
        Ok(PyCoefficients { inner: c })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("coefficients serialize")
    }

    /// `(p, q, r)` at `x`.
    fn eval(&self, x: f64) -> PyResult<(f64, f64, f64)> {
        let pt = self.inner.eval(x).map_err(err)?;
        Ok((pt.p, pt.q, pt.r))
    }

    fn __repr__(&self) -> String {
        format!("Coefficients({})", self.to_json())
    }
}

/// A Sturm–Liouville problem on `(a, b)` with its boundary data.
#[pyclass(name = "Problem", module = "relosc")]
#[derive(Clone)]
pub struct PyProblem {
    inner: SLProblem,
}

#[pymethods]
impl PyProblem {
    /// `bc_a`, `bc_b`: Prüfer angles, or `None` for a singular endpoint.
    #[new]
    #[pyo3(signature = (coefficients, a, b, bc_a=Some(0.0), bc_b=Some(std::f64::consts::PI)))]
    fn new(coefficients: &PyCoefficients, a: f64, b: f64, bc_a: Option<f64>, bc_b: Option<f64>) -> PyResult<Self> {
        let bc = |x: Option<f64>| x.map_or(BoundaryCondition::Singular, BoundaryCondition::Angle);
        let p = SLProblem::new(coefficients.inner.clone(), a, b, bc(bc_a), bc(bc_b)).map_err(err)?;
        Ok(PyProblem { inner: p })
    }

    #[staticmethod]
    #[pyo3(signature = (coefficients, a=0.0, alpha=0.0))]
    fn half_line(coefficients: &PyCoefficients, a: f64, alpha: f64) -> PyResult<Self> {
        Ok(PyProblem { inner: SLProblem::half_line(coefficients.inner.clone(), a, alpha).map_err(err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyProblem { inner: SLProblem::from_json(text).map_err(err)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn interval(&self) -> (f64, f64) {
        self.inner.interval
    }

    #[getter]
    fn coefficients(&self) -> PyCoefficients {
        PyCoefficients { inner: self.inner.coefficients.clone() }
    }

    fn is_regular(&self) -> bool {
        self.inner.is_regular()
    }

    fn __repr__(&self) -> String {
        let (a, b) = self.inner.interval;
        format!("Problem(a={a}, b={b}, regular={})", self.inner.is_regular())
    }
}

/// Prüfer angle and log-amplitude of one solution, sampled on a grid.
#[pyclass(name = "Trajectory", module = "relosc")]
pub struct PyTrajectory {
    inner: PruferTrajectory,
}

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn x(&self) -> Vec<f64> {
        self.inner.grid().to_vec()
    }

    #[getter]
    fn theta(&self) -> Vec<f64> {
        self.inner.theta_samples().iter().map(|a| a.to_radians()).collect()
    }

    #[getter]
    fn log_rho(&self) -> Vec<f64> {
        self.inner.log_rho_samples().to_vec()
    }

    fn theta_at(&self, x: f64) -> PyResult<f64> {
        Ok(self.inner.theta_at(x).map_err(err)?.to_radians())
    }

    fn __len__(&self) -> usize {
        self.inner.grid().len()
    }
}

/// `ψ−` (from `a`) or `ψ+` (from `b`) at `lam`, on `[a, x_end]`.
#[pyfunction]
#[pyo3(signature = (problem, lam, kind="minus", x_end=None, tol=1e-10))]
fn solution(problem: &PyProblem, lam: f64, kind: &str, x_end: Option<f64>, tol: f64) -> PyResult<PyTrajectory> {
    let p = &problem.inner;
    let hi = match x_end {
        Some(x) => x,
        None if p.is_regular() => p.b(),
        None => return Err(PyValueError::new_err("singular right endpoint: pass x_end")),
    };
    let t = SolutionSpec::new(p, lam, psi(kind)?).trajectory(p.a(), hi, tol).map_err(err)?;
    Ok(PyTrajectory { inner: t })
}

/// Weighted Wronskian sign flips of two trajectories on `(c, d)`.
#[pyfunction]
#[pyo3(signature = (first, second, c, d, eps_pi=1e-7))]
fn flip_count(py: Python<'_>, first: &PyTrajectory, second: &PyTrajectory, c: f64, d: f64, eps_pi: f64) -> PyResult<PyObject> {
    let fc = wronskian::flip_count(&first.inner, &second.inner, c, d, eps_pi).map_err(err)?;
    to_py(py, &fc)
}

/// Stabilized flip count of `ψ±` pairs along a truncation schedule.
#[pyfunction]
#[pyo3(signature = (problem0, problem1, lam0, lam1, kind0="plus", kind1="minus", xmax=None, eps_pi=1e-7, tol=1e-9))]
#[allow(clippy::too_many_arguments)]
fn limit_flip_count(
    py: Python<'_>,
    problem0: &PyProblem,
    problem1: &PyProblem,
    lam0: f64,
    lam1: f64,
    kind0: &str,
    kind1: &str,
    xmax: Option<f64>,
    eps_pi: f64,
    tol: f64,
) -> PyResult<PyObject> {
    let s = schedule(&problem0.inner, xmax)?;
    let lim = wronskian::limit_flip_count_pair(
        SolutionSpec::new(&problem0.inner, lam0, psi(kind0)?),
        SolutionSpec::new(&problem1.inner, lam1, psi(kind1)?),
        &s,
        eps_pi,
        tol,
    )
    .map_err(err)?;
    to_py(py, &lim)
}

/// Number of eigenvalues strictly below `lam` (regular problems).
#[pyfunction]
#[pyo3(signature = (problem, lam, tol=1e-10))]
fn count_below(problem: &PyProblem, lam: f64, tol: f64) -> PyResult<u64> {
    Ok(spectra::count_below(&problem.inner, lam, tol).map_err(err)?.count_strictly_below)
}

#[pyfunction]
#[pyo3(signature = (problem, lam0, lam1, tol=1e-10))]
fn eigenvalues(problem: &PyProblem, lam0: f64, lam1: f64, tol: f64) -> PyResult<Vec<f64>> {
    spectra::eigenvalues_in(&problem.inner, lam0, lam1, tol).map_err(err)
}

/// Monodromy matrix, discriminant and its λ-derivative.
#[pyfunction]
fn monodromy(py: Python<'_>, coefficients: &PyCoefficients, period: f64, lam: f64) -> PyResult<PyObject> {
    let rec = floquet::monodromy(&coefficients.inner, period, lam, BandOptions::default().ode_tol).map_err(err)?;
    to_py(py, &rec)
}

/// Band edges in `[lmin, lmax]` with their critical κ.
#[pyfunction]
#[pyo3(signature = (coefficients, period, lmin, lmax, scan_points=512))]
fn band_edges(py: Python<'_>, coefficients: &PyCoefficients, period: f64, lmin: f64, lmax: f64, scan_points: usize) -> PyResult<PyObject> {
    let opts = BandOptions { scan_points, ..BandOptions::default() };
    let edges = floquet::band_edges(&coefficients.inner, period, lmin, lmax, &opts).map_err(err)?;
    to_py(py, &edges)
}

/// Projection difference against flip counts for a regular pair.
#[pyfunction]
#[pyo3(signature = (problem0, problem1, lam0, lam1, tol=1e-10, eps_pi=1e-7))]
fn verify_regular(py: Python<'_>, problem0: &PyProblem, problem1: &PyProblem, lam0: f64, lam1: f64, tol: f64, eps_pi: f64) -> PyResult<PyObject> {
    let r = ex::verify_regular_equality(&problem0.inner, &problem1.inner, lam0, lam1, &options(tol, eps_pi)).map_err(err)?;
    to_py(py, &r)
}

/// Half-line eigenvalue count difference against the limit flip count.
#[pyfunction]
#[pyo3(signature = (problem0, problem1, lam, xmax=None, tol=1e-10, eps_pi=1e-7))]
fn verify_halfline(py: Python<'_>, problem0: &PyProblem, problem1: &PyProblem, lam: f64, xmax: Option<f64>, tol: f64, eps_pi: f64) -> PyResult<PyObject> {
    let s = schedule(&problem0.inner, xmax)?;
    let r = ex::halfline_shift_count(&problem0.inner, &problem1.inner, lam, &s, &options(tol, eps_pi)).map_err(err)?;
    to_py(py, &r)
}

/// Kneser classification of a tail potential on the grid `x0·2^k`.
#[pyfunction]
#[pyo3(signature = (coefficients, x0=4.0, k_max=20))]
fn kneser(py: Python<'_>, coefficients: &PyCoefficients, x0: f64, k_max: u32) -> PyResult<PyObject> {
    let v = ex::kneser_classify(&coefficients.inner, &ex::geometric_grid(x0, k_max)).map_err(err)?;
    to_py(py, &v)
}

#[pymodule]
fn relosc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyCoefficients>()?;
    m.add_class::<PyProblem>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(solution, m)?)?;
    m.add_function(wrap_pyfunction!(flip_count, m)?)?;
    m.add_function(wrap_pyfunction!(limit_flip_count, m)?)?;
    m.add_function(wrap_pyfunction!(count_below, m)?)?;
    m.add_function(wrap_pyfunction!(eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(monodromy, m)?)?;
    m.add_function(wrap_pyfunction!(band_edges, m)?)?;
    m.add_function(wrap_pyfunction!(verify_regular, m)?)?;
    m.add_function(wrap_pyfunction!(verify_halfline, m)?)?;
    m.add_function(wrap_pyfunction!(kneser, m)?)?;
    Ok(())
}
