//! Python bindings. Results are returned as plain dicts with the same
//! layout as the JSON files the command-line tool writes.

use advscc::adversary::{best_response, brute_force_best_response, unrestricted_response};
use advscc::checks::divergence_battery;
use advscc::continuous::{
    train_scc, MarginRule, PitchRule, QuantileSource, SccConfig, SccModel,
};
use advscc::experiments::{default_lambda_grid, run_sweep, Family, SweepConfig};
use advscc::game::{solve_dual, solve_hard_ldrs, solve_soft};
use advscc::io::{from_json, to_json, ModelFile, ResultFile, SpecFile, FORMAT_VERSION};
use advscc::{evaluate, DivergenceKind, Error, Pmf, RejectionFunction};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::NumericalBreakdown(_)
        | Error::LpStatus(_)
        | Error::InvariantViolation(_)
        | Error::NotBracketed { .. }
        | Error::Degenerate(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn parse_kind(name: &str) -> PyResult<DivergenceKind> {
    name.parse().map_err(py_err)
}

/// A discrete game: target `p`, adversary budget `lam`, and either the
/// type I bound `delta` (primal) or `delta_q` (dual).
#[pyclass(name = "Spec", module = "advscc", frozen)]
struct PySpec {
    inner: SpecFile,
}

#[pymethods]
impl PySpec {
    #[new]
    #[pyo3(signature = (p, lam, divergence = "kl2", delta = None, delta_q = None))]
    fn new(
        p: Vec<f64>,
        lam: f64,
        divergence: &str,
        delta: Option<f64>,
        delta_q: Option<f64>,
    ) -> PyResult<Self> {
        let inner = SpecFile {
            version: FORMAT_VERSION,
            p,
            delta,
            lambda: lam,
            divergence: parse_kind(divergence)?,
            delta_q,
        };
        inner.pmf().map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner: SpecFile = from_json(text).map_err(py_err)?;
        inner.pmf().map_err(py_err)?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> String {
        to_json(&self.inner)
    }

    #[getter]
    fn p(&self) -> Vec<f64> {
        self.inner.p.clone()
    }

    #[getter]
    fn delta(&self) -> Option<f64> {
        self.inner.delta
    }

    #[getter]
    fn lam(&self) -> f64 {
        self.inner.lambda
    }

    #[getter]
    fn divergence(&self) -> String {
        self.inner.divergence.to_string()
    }

    /// Optimal soft rejection function and its worst-case type II error.
    fn solve(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let spec = self.inner.game_spec().map_err(py_err)?;
        to_py(py, &ResultFile::from_soft(&solve_soft(&spec).map_err(py_err)?))
    }

    /// Hard low-density rejection function and its worst case.
    fn hard(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let spec = self.inner.game_spec().map_err(py_err)?;
        to_py(py, &ResultFile::from_hard(&solve_hard_ldrs(&spec).map_err(py_err)?))
    }

    /// Minimal type I error keeping the adversary's acceptance at most `delta_q`.
    #[pyo3(signature = (delta_q = None))]
    fn dual(&self, py: Python<'_>, delta_q: Option<f64>) -> PyResult<Py<PyAny>> {
        let mut file = self.inner.clone();
        if delta_q.is_some() {
            file.delta_q = delta_q;
        }
        let spec = file.dual_spec().map_err(py_err)?;
        to_py(py, &ResultFile::from_dual(&solve_dual(&spec).map_err(py_err)?))
    }

    /// Adversary's reply to rejection rates `r`. Returns `None` when no
    /// distribution satisfies the constraint.
    #[pyo3(signature = (r, mode = "structured", resolution = 400))]
    fn best_response(
        &self,
        py: Python<'_>,
        r: Vec<f64>,
        mode: &str,
        resolution: u32,
    ) -> PyResult<Option<Py<PyAny>>> {
        let c = self.inner.constraint().map_err(py_err)?;
        let r = RejectionFunction::soft(r).map_err(py_err)?;
        let res = match mode {
            "structured" => best_response(&r, &c),
            "brute" => brute_force_best_response(&r, &c, resolution),
            "unrestricted" => unrestricted_response(&r, &c),
            _ => return Err(PyValueError::new_err(format!("unknown mode `{mode}`"))),
        };
        match res {
            Ok(b) => {
                let out = serde_json::json!({
                    "q": b.q,
                    "value": b.value,
                    "divergence": b.divergence,
                });
                Ok(Some(to_py(py, &out)?))
            }
            Err(Error::AdversaryInfeasible | Error::NoFeasiblePoint(_)) => Ok(None),
            Err(e) => Err(py_err(e)),
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "Spec(n={}, lam={}, divergence='{}', delta={:?}, delta_q={:?})",
            self.inner.p.len(),
            self.inner.lambda,
            self.inner.divergence,
            self.inner.delta,
            self.inner.delta_q
        )
    }
}

/// Grid-background rejector trained on target samples only.
#[pyclass(name = "SccModel", module = "advscc", frozen)]
struct PySccModel {
    inner: SccModel,
}

#[pymethods]
impl PySccModel {
    #[staticmethod]
    #[allow(clippy::too_many_arguments)]
    #[pyo3(signature = (
        points, delta, seed, pitch = None, select_pitch = None, min_count = 1,
        negbinom = false, margin = "missing_mass", holdout = None
    ))]
    fn train(
        points: Vec<Vec<f64>>,
        delta: f64,
        seed: u64,
        pitch: Option<f64>,
        select_pitch: Option<usize>,
        min_count: usize,
        negbinom: bool,
        margin: &str,
        holdout: Option<f64>,
    ) -> PyResult<Self> {
        let config = SccConfig {
            pitch: match (pitch, select_pitch) {
                (Some(_), Some(_)) => {
                    return Err(PyValueError::new_err("give pitch or select_pitch, not both"))
                }
                (Some(pitch), None) => PitchRule::Fixed { pitch },
                (None, Some(t)) => PitchRule::Select { t },
                (None, None) => PitchRule::Default,
            },
            min_count,
            negbinom,
            margin: match margin {
                "missing_mass" => MarginRule::MissingMass { z: 0.0 },
                "cube_root" => MarginRule::CubeRoot,
                _ => return Err(PyValueError::new_err(format!("unknown margin `{margin}`"))),
            },
            quantile_source: holdout.map_or(QuantileSource::Training, |fraction| {
                QuantileSource::Holdout { fraction }
            }),
            ..SccConfig::default()
        };
        let inner = train_scc(&points, delta, &config, seed).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let file: ModelFile = from_json(text).map_err(py_err)?;
        Ok(Self { inner: file.model })
    }

    fn to_json(&self) -> String {
        to_json(&ModelFile::new(self.inner.clone()))
    }

    /// One flag per point; `True` means rejected.
    fn reject(&self, points: Vec<Vec<f64>>) -> PyResult<Vec<bool>> {
        self.inner.reject_batch(&points).map_err(py_err)
    }

    fn reject_fraction(&self, points: Vec<Vec<f64>>) -> PyResult<f64> {
        self.inner.reject_fraction(&points).map_err(py_err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn pitch(&self) -> f64 {
        self.inner.grid.pitch
    }

    #[getter]
    fn covered_cells(&self) -> usize {
        self.inner.covered.len()
    }

    #[getter]
    fn thresholds(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner.thresholds)
    }

    #[getter]
    fn margins(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner.margins)
    }

    fn __repr__(&self) -> String {
        format!(
            "SccModel(n={}, covered_cells={}, pitch={})",
            self.inner.n,
            self.inner.covered.len(),
            self.inner.grid.pitch
        )
    }
}

/// `D(q || p)` for a named divergence (`kl2`, `sqeuclid`, `bregman:<g>`).
#[pyfunction]
#[pyo3(signature = (q, p, kind = "kl2"))]
fn divergence(q: Vec<f64>, p: Vec<f64>, kind: &str) -> PyResult<f64> {
    let p = Pmf::new(&p).map_err(py_err)?;
    evaluate(&parse_kind(kind)?, &q, &p).map_err(py_err)
}

/// Monte Carlo sweep of hard and soft worst-case errors; returns the report.
#[pyfunction]
#[pyo3(signature = (
    seed, family = "arbitrary", n_events = 50, delta = 0.05, lambdas = None, reps = 50, jobs = None
))]
#[allow(clippy::too_many_arguments)]
fn sweep(
    py: Python<'_>,
    seed: u64,
    family: &str,
    n_events: usize,
    delta: f64,
    lambdas: Option<Vec<f64>>,
    reps: usize,
    jobs: Option<usize>,
) -> PyResult<Py<PyAny>> {
    let family = match family {
        "arbitrary" => Family::Arbitrary,
        "gaussian" => Family::Gaussian,
        _ => return Err(PyValueError::new_err(format!("unknown family `{family}`"))),
    };
    let config = SweepConfig {
        family,
        n_events,
        delta,
        lambda_grid: lambdas.unwrap_or_else(default_lambda_grid),
        reps,
        seed,
    };
    let report = py.detach(|| run_sweep(&config, jobs)).map_err(py_err)?;
    to_py(py, &report)
}

/// Randomized property battery for one divergence.
#[pyfunction]
#[pyo3(signature = (kind, trials, seed))]
fn check(py: Python<'_>, kind: &str, trials: usize, seed: u64) -> PyResult<Py<PyAny>> {
    let report = divergence_battery(&parse_kind(kind)?, trials, seed).map_err(py_err)?;
    to_py(py, &report)
}

#[pymodule]
#[pyo3(name = "advscc")]
fn advscc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpec>()?;
    m.add_class::<PySccModel>()?;
    m.add_function(wrap_pyfunction!(divergence, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("FORMAT_VERSION", FORMAT_VERSION)?;
    Ok(())
}
