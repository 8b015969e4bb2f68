//! Python bindings: polytopes, objectives, the two solvers, diagnostics and
//! the experiment runners.

use awayfw_core::bench::{self, Method, PlantedFaceConfig, RecoveryConfig, RobustnessConfig};
use awayfw_core::diagnostics;
use awayfw_core::solver::{greedy_start, run_away_fw, run_fw, SolverConfig, Trace as CoreTrace};
use awayfw_core::{
    DenseMatrix, Error, LeastSquaresObjective, LinearObjective, SmoothObjective, SquaredNormObjective, TieBreakPolicy,
    TiltedObjective, VertexId,
};
use pyo3::exceptions::{PyNotImplementedError, PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument(_) | Error::Parse { .. } | Error::Json(_) => PyValueError::new_err(e.to_string()),
        Error::Unsupported(_) => PyNotImplementedError::new_err(e.to_string()),
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        Error::Inconsistent(_) => PyRuntimeError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for awayfw_core::Result<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

/// Serializes through JSON into plain Python dicts and lists.
fn to_dict<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn ids(raw: Vec<u64>) -> Vec<VertexId> {
    raw.into_iter().map(VertexId).collect()
}

#[pyclass(name = "Polytope", frozen)]
struct PyPolytope {
    inner: awayfw_core::Polytope,
}

#[pymethods]
impl PyPolytope {
    /// `scale·{x ≥ 0, Σx = 1}`; vertex `i` is `scale·e_i` (1-based).
    #[staticmethod]
    #[pyo3(signature = (dim, scale = 1.0))]
    fn unit_simplex(dim: usize, scale: f64) -> PyResult<Self> {
        Ok(Self {
            inner: awayfw_core::Polytope::unit_simplex(dim, scale).py_err()?,
        })
    }

    /// `{x ≥ 0, Σx ≤ 1}`; vertex 0 is the origin.
    #[staticmethod]
    fn down_closed_simplex(dim: usize) -> PyResult<Self> {
        Ok(Self {
            inner: awayfw_core::Polytope::down_closed_simplex(dim).py_err()?,
        })
    }

    #[staticmethod]
    fn hypercube(dim: usize) -> PyResult<Self> {
        Ok(Self {
            inner: awayfw_core::Polytope::hypercube(dim).py_err()?,
        })
    }

    /// Convex hull of the listed points; ids are list positions.
    #[staticmethod]
    fn explicit(vertices: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Self {
            inner: awayfw_core::Polytope::explicit(vertices).py_err()?,
        })
    }

    #[staticmethod]
    fn from_file(path: std::path::PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: awayfw_core::Polytope::explicit_from_file(path).py_err()?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn diameter(&self) -> f64 {
        self.inner.diameter()
    }

    fn vertex(&self, id: u64) -> PyResult<Vec<f64>> {
        Ok(self.inner.vertex(VertexId(id)).py_err()?.coords().to_vec())
    }

    /// Returns `(id, coords)` of a vertex minimizing `⟨grad, v⟩`. With
    /// `avoid`, ties are broken away from those ids when possible.
    #[pyo3(signature = (grad, avoid = None))]
    fn lmo(&self, grad: Vec<f64>, avoid: Option<Vec<u64>>) -> PyResult<(u64, Vec<f64>)> {
        let policy = match avoid {
            Some(a) => TieBreakPolicy::adversarial(ids(a)),
            None => TieBreakPolicy::FirstIndex,
        };
        let v = self.inner.lmo(&grad, &policy).py_err()?;
        Ok((v.id().0, v.coords().to_vec()))
    }

    #[pyo3(signature = (x, tol = 1e-9))]
    fn contains(&self, x: Vec<f64>, tol: f64) -> PyResult<bool> {
        self.inner.contains(&x, tol).py_err()
    }

    /// Returns `(sorted vertex ids, dimension)` of the face spanned by `support`.
    fn face_of_support(&self, support: Vec<u64>) -> PyResult<(Vec<u64>, usize)> {
        let face = self.inner.face_of_support(&ids(support)).py_err()?;
        Ok((face.vertex_ids.iter().map(|v| v.0).collect(), face.dim))
    }

    fn __repr__(&self) -> String {
        format!("Polytope({:?})", self.inner.kind())
    }
}

#[derive(Clone)]
enum ObjectiveKind {
    LeastSquares(LeastSquaresObjective),
    SquaredNorm(SquaredNormObjective),
    Linear(LinearObjective),
    Tilted(TiltedObjective<LeastSquaresObjective>),
}

#[pyclass(name = "Objective", frozen)]
struct PyObjective {
    inner: ObjectiveKind,
}

impl PyObjective {
    fn get(&self) -> &dyn SmoothObjective {
        match &self.inner {
            ObjectiveKind::LeastSquares(o) => o,
            ObjectiveKind::SquaredNorm(o) => o,
            ObjectiveKind::Linear(o) => o,
            ObjectiveKind::Tilted(o) => o,
        }
    }
}

#[pymethods]
impl PyObjective {
    /// `½‖Ax − b‖²` with `a` given as a list of rows.
    #[staticmethod]
    fn least_squares(a: Vec<Vec<f64>>, b: Vec<f64>) -> PyResult<Self> {
        let rows = a.len();
        let cols = a.first().map_or(0, Vec::len);
        if a.iter().any(|r| r.len() != cols) {
            return Err(PyValueError::new_err("rows of A have different lengths"));
        }
        let m = DenseMatrix::from_row_major(rows, cols, a.concat()).py_err()?;
        Ok(Self {
            inner: ObjectiveKind::LeastSquares(LeastSquaresObjective::new(m, b).py_err()?),
        })
    }

    /// `½‖x‖²`.
    #[staticmethod]
    fn squared_norm(dim: usize) -> Self {
        Self {
            inner: ObjectiveKind::SquaredNorm(SquaredNormObjective::new(dim)),
        }
    }

    /// `⟨c, x⟩`.
    #[staticmethod]
    fn linear(c: Vec<f64>) -> Self {
        Self {
            inner: ObjectiveKind::Linear(LinearObjective::new(c)),
        }
    }

    /// This least-squares objective plus `⟨tilt, x⟩`.
    fn tilted(&self, tilt: Vec<f64>) -> PyResult<Self> {
        match &self.inner {
            ObjectiveKind::LeastSquares(ls) => Ok(Self {
                inner: ObjectiveKind::Tilted(TiltedObjective::new(ls.clone(), tilt).py_err()?),
            }),
            _ => Err(PyNotImplementedError::new_err(
                "only least-squares objectives can be tilted",
            )),
        }
    }

    #[getter]
    fn dim(&self) -> usize {
        self.get().dim()
    }

    #[getter]
    fn smoothness(&self) -> f64 {
        self.get().smoothness()
    }

    fn value(&self, x: Vec<f64>) -> PyResult<f64> {
        self.check(&x)?;
        Ok(self.get().value(&x))
    }

    fn gradient(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.check(&x)?;
        Ok(self.get().gradient(&x))
    }
}

impl PyObjective {
    fn check(&self, x: &[f64]) -> PyResult<()> {
        if x.len() == self.get().dim() {
            Ok(())
        } else {
            Err(PyValueError::new_err(format!(
                "expected length {}, got {}",
                self.get().dim(),
                x.len()
            )))
        }
    }
}

#[pyclass(name = "Trace", frozen)]
struct PyTrace {
    inner: CoreTrace,
}

#[pymethods]
impl PyTrace {
    /// One of `gap_reached`, `max_iters`, `exact_optimum`, `stalled`.
    #[getter]
    fn termination(&self) -> String {
        serde_json::to_value(self.inner.termination)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_else(|| format!("{:?}", self.inner.termination))
    }

    #[getter]
    fn iterations(&self) -> Vec<usize> {
        self.inner.records.iter().map(|r| r.t).collect()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.records.iter().map(|r| r.f_value).collect()
    }

    #[getter]
    fn gaps(&self) -> Vec<f64> {
        self.inner.records.iter().map(|r| r.fw_gap).collect()
    }

    /// `fw`, `away` or `None` for the closing record.
    #[getter]
    fn steps(&self) -> Vec<Option<&'static str>> {
        self.inner
            .records
            .iter()
            .map(|r| r.step_kind.map(|k| k.as_str()))
            .collect()
    }

    #[getter]
    fn drops(&self) -> Vec<bool> {
        self.inner.records.iter().map(|r| r.is_drop).collect()
    }

    #[getter]
    fn drop_count(&self) -> usize {
        self.inner.drop_count
    }

    #[getter]
    fn final_point(&self) -> Vec<f64> {
        self.inner.final_point.clone()
    }

    #[getter]
    fn final_value(&self) -> f64 {
        self.inner.final_value
    }

    #[getter]
    fn final_gap(&self) -> f64 {
        self.inner.final_gap()
    }

    /// `(vertex id, weight)` pairs of the final convex decomposition.
    #[getter]
    fn final_active(&self) -> Vec<(u64, f64)> {
        self.inner.final_active.iter().map(|(id, w)| (id.0, *w)).collect()
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv_string()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[allow(clippy::too_many_arguments)]
fn solve(
    away: bool,
    objective: &PyObjective,
    polytope: &PyPolytope,
    start: Option<u64>,
    max_iters: usize,
    gap_tol: f64,
    adversarial: bool,
    record_iterates: bool,
) -> PyResult<PyTrace> {
    let p = &polytope.inner;
    let obj = objective.get();
    let start = match start {
        Some(id) => p.vertex(VertexId(id)).py_err()?,
        None => greedy_start(obj, p).py_err()?,
    };
    let cfg = SolverConfig {
        max_iters,
        gap_tol,
        adversarial_mode: adversarial,
        record_iterates,
        ..SolverConfig::default()
    };
    let trace = if away {
        run_away_fw(obj, p, &start, &cfg)
    } else {
        run_fw(obj, p, &start, &cfg)
    };
    Ok(PyTrace { inner: trace.py_err()? })
}

/// Plain Frank-Wolfe with exact line search. `start` is a vertex id; by
/// default the oracle's answer at the lowest-id vertex.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(name = "run_fw", signature = (objective, polytope, start = None, max_iters = 10_000, gap_tol = 1e-10, adversarial = false, record_iterates = false))]
fn run_fw_py(
    py: Python<'_>,
    objective: &PyObjective,
    polytope: &PyPolytope,
    start: Option<u64>,
    max_iters: usize,
    gap_tol: f64,
    adversarial: bool,
    record_iterates: bool,
) -> PyResult<PyTrace> {
    py.detach(|| {
        solve(
            false,
            objective,
            polytope,
            start,
            max_iters,
            gap_tol,
            adversarial,
            record_iterates,
        )
    })
}

/// Frank-Wolfe with away steps; same arguments as `run_fw`.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(name = "run_away_fw", signature = (objective, polytope, start = None, max_iters = 10_000, gap_tol = 1e-10, adversarial = false, record_iterates = false))]
fn run_away_fw_py(
    py: Python<'_>,
    objective: &PyObjective,
    polytope: &PyPolytope,
    start: Option<u64>,
    max_iters: usize,
    gap_tol: f64,
    adversarial: bool,
    record_iterates: bool,
) -> PyResult<PyTrace> {
    py.detach(|| {
        solve(
            true,
            objective,
            polytope,
            start,
            max_iters,
            gap_tol,
            adversarial,
            record_iterates,
        )
    })
}

/// Returns `{"delta", "face", "face_dim", "face_tol"}` at `x_star`.
#[pyfunction]
#[pyo3(signature = (polytope, objective, x_star, face_tol = None))]
fn estimate_strict_complementarity<'py>(
    py: Python<'py>,
    polytope: &PyPolytope,
    objective: &PyObjective,
    x_star: Vec<f64>,
    face_tol: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    objective.check(&x_star)?;
    let tol = face_tol.unwrap_or_else(|| diagnostics::default_face_tol(objective.get().value(&x_star)));
    let rep = diagnostics::estimate_strict_complementarity(&polytope.inner, objective.get(), &x_star, tol).py_err()?;
    let dict = pyo3::types::PyDict::new(py);
    dict.set_item("delta", rep.delta)?;
    dict.set_item("face", rep.face.vertex_ids.iter().map(|v| v.0).collect::<Vec<_>>())?;
    dict.set_item("face_dim", rep.face.dim)?;
    dict.set_item("face_tol", rep.face_tol)?;
    Ok(dict.into_any())
}

/// Largest tilt norm under which the optimal face provably survives.
#[pyfunction]
fn robustness_bound(delta: f64, diameter: f64, beta: f64, alpha: f64) -> PyResult<f64> {
    Ok(diagnostics::robustness_bound(delta, diameter, beta, alpha)
        .py_err()?
        .nu_max)
}

/// Returns `(slope, r_squared)` of `ln(f − f_star)` against `t` on the window.
#[pyfunction]
fn fit_linear_rate(trace: &PyTrace, f_star: f64, t_start: usize, t_end: usize) -> PyResult<(f64, f64)> {
    let fit = diagnostics::fit_linear_rate(&trace.inner, f_star, t_start, t_end).py_err()?;
    Ok((fit.slope, fit.r_squared))
}

/// Every prefix of `T` steps has at most `(k_init + T)/2` drop steps.
#[pyfunction]
#[pyo3(signature = (trace, k_init = 1))]
fn verify_observation1(trace: &PyTrace, k_init: usize) -> bool {
    diagnostics::verify_observation1(&trace.inner, k_init)
}

fn method(name: &str) -> PyResult<Method> {
    match name {
        "fw" => Ok(Method::Fw),
        "away" | "away_fw" => Ok(Method::AwayFw),
        _ => Err(PyValueError::new_err(format!(
            "method must be 'fw' or 'away', got {name:?}"
        ))),
    }
}

/// `½‖x‖²` over the down-closed simplex. Returns the trace and the first
/// iteration with `f < 1/d` (or `None`).
#[pyfunction]
#[pyo3(signature = (d, method_name = "fw", adversarial = true))]
fn run_lower_bound(
    py: Python<'_>,
    d: usize,
    method_name: &str,
    adversarial: bool,
) -> PyResult<(PyTrace, Option<usize>)> {
    let m = method(method_name)?;
    let rep = py.detach(|| bench::run_lower_bound(d, m, adversarial)).py_err()?;
    Ok((PyTrace { inner: rep.trace }, rep.iterations_to_below_1_over_d))
}

/// Sparse recovery over `tau·Δ_d`, averaged over `runs` seeded instances.
#[pyfunction]
#[pyo3(signature = (d = 400, m = 125, nnz = 5, c = 0.2, tau = 0.7, runs = 50, seed = 1))]
#[allow(clippy::too_many_arguments)]
fn run_recovery<'py>(
    py: Python<'py>,
    d: usize,
    m: usize,
    nnz: usize,
    c: f64,
    tau: f64,
    runs: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = RecoveryConfig {
        d,
        m,
        nnz,
        noise_scale: c,
        simplex_scale: tau,
        runs,
        seed,
    };
    let rep = py.detach(|| bench::run_recovery(&cfg)).py_err()?;
    to_dict(py, &rep)
}

/// Re-solves a planted-face instance under linear tilts of the given norms.
#[pyfunction]
#[pyo3(signature = (nu, seed = 1, d = 30, m = 60, face_size = 3))]
fn run_robustness<'py>(
    py: Python<'py>,
    nu: Vec<f64>,
    seed: u64,
    d: usize,
    m: usize,
    face_size: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let defaults = RobustnessConfig::default();
    let cfg = RobustnessConfig {
        instance: PlantedFaceConfig {
            d,
            m,
            face_size,
            ..defaults.instance
        },
        seed,
        ..defaults
    };
    let rep = py.detach(|| bench::run_robustness(&cfg, &nu)).py_err()?;
    to_dict(py, &rep)
}

#[pymodule]
#[pyo3(name = "awayfw")]
fn awayfw_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPolytope>()?;
    m.add_class::<PyObjective>()?;
    m.add_class::<PyTrace>()?;
    m.add_function(wrap_pyfunction!(run_fw_py, m)?)?;
    m.add_function(wrap_pyfunction!(run_away_fw_py, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_strict_complementarity, m)?)?;
    m.add_function(wrap_pyfunction!(robustness_bound, m)?)?;
    m.add_function(wrap_pyfunction!(fit_linear_rate, m)?)?;
    m.add_function(wrap_pyfunction!(verify_observation1, m)?)?;
    m.add_function(wrap_pyfunction!(run_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(run_recovery, m)?)?;
    m.add_function(wrap_pyfunction!(run_robustness, m)?)?;
    Ok(())
}
