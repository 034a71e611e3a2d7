//! Python bindings. Errors surface as `ValueError` (or `OSError` for I/O).

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

use noisetab_core as core;
use noisetab_core::select::{SearchLimits, SelectionProblem, SlotAssignment};

fn err(e: core::Error) -> PyErr {
    match e {
        core::Error::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

#[pyclass(name = "NoiseEstimate", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyNoiseEstimate {
    /// Zero when the estimator declined.
    value: f64,
    /// "Ok", "SpreadTooLarge" or "NoAgreement".
    status: String,
    selected_order: Option<usize>,
    /// `(order, estimate, sign_change)` for each order.
    per_order: Vec<(usize, f64, bool)>,
}

#[pymethods]
impl PyNoiseEstimate {
    fn is_ok(&self) -> bool {
        self.status == core::EstimateStatus::Ok.as_str()
    }

    fn __repr__(&self) -> String {
        format!("NoiseEstimate(value={:e}, status={:?}, selected_order={:?})", self.value, self.status, self.selected_order)
    }
}

impl From<core::NoiseEstimate> for PyNoiseEstimate {
    fn from(e: core::NoiseEstimate) -> Self {
        PyNoiseEstimate {
            value: e.value,
            status: e.status.as_str().to_string(),
            selected_order: e.selected_order,
            per_order: e.per_order.iter().map(|o| (o.order, o.estimate, o.sign_change)).collect(),
        }
    }
}

#[pyclass(name = "NewtonCurve", frozen)]
struct PyNewtonCurve(core::NewtonCurve);

#[pymethods]
impl PyNewtonCurve {
    #[new]
    fn new(points: Vec<Vec<f64>>) -> PyResult<Self> {
        let ps = core::PointSet::new(points).map_err(err)?;
        Ok(PyNewtonCurve(core::newton_curve(&ps)))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn order(&self) -> usize {
        self.0.order()
    }

    /// `coeffs[i][k]` is the k-th divided difference of coordinate i.
    #[getter]
    fn coeffs(&self) -> Vec<Vec<f64>> {
        self.0.coeffs().to_vec()
    }

    fn __call__(&self, t: f64) -> Vec<f64> {
        self.0.eval(t)
    }

    fn derivative(&self, t: f64, k: usize) -> Vec<f64> {
        self.0.derivative(t, k)
    }
}

#[pyclass(name = "SelectionSolution", frozen, get_all)]
struct PySelectionSolution {
    /// One entry per slot: a pool index (int) or a free offset (list of floats).
    assignment: Vec<Py<PyAny>>,
    objective: f64,
    optimal: bool,
    nodes: u64,
    diagnostics: Vec<String>,
}

#[pymethods]
impl PySelectionSolution {
    fn __repr__(&self) -> String {
        format!("SelectionSolution(objective={:e}, optimal={}, nodes={})", self.objective, self.optimal, self.nodes)
    }
}

fn solution_to_py(py: Python<'_>, s: core::SelectionSolution) -> PyResult<PySelectionSolution> {
    let assignment = s
        .assignment
        .into_iter()
        .map(|a| match a {
            SlotAssignment::Pool { index } => Ok(index.into_pyobject(py)?.into_any().unbind()),
            SlotAssignment::Free { offset } => Ok(offset.into_pyobject(py)?.into_any().unbind()),
        })
        .collect::<PyResult<Vec<_>>>()?;
    Ok(PySelectionSolution {
        assignment,
        objective: s.objective,
        optimal: s.optimal,
        nodes: s.nodes,
        diagnostics: s.diagnostics,
    })
}

#[allow(clippy::too_many_arguments)]
fn problem(
    base: Vec<f64>,
    pool: Vec<Vec<f64>>,
    m: usize,
    reuse: usize,
    h: f64,
    max_nodes: u64,
    time_limit: Option<f64>,
) -> SelectionProblem {
    SelectionProblem {
        base,
        pool,
        m,
        reuse,
        h,
        limits: SearchLimits {
            max_nodes,
            time_limit_secs: time_limit,
        },
    }
}

/// Forward difference table: entry k holds the order-k column, entry 0 the values.
#[pyfunction]
fn difference_table(values: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
    let t = core::build_table(&values).map_err(err)?;
    Ok((0..=t.max_order()).filter_map(|k| t.column(k)).map(<[f64]>::to_vec).collect())
}

#[pyfunction]
fn gamma(k: usize) -> PyResult<f64> {
    core::gamma(k).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (values, spread_factor = 0.1, agreement_factor = 4.0))]
fn estimate_noise(values: Vec<f64>, spread_factor: f64, agreement_factor: f64) -> PyResult<PyNoiseEstimate> {
    let options = core::HeuristicOptions {
        spread_factor,
        agreement_factor,
    };
    core::estimate_noise(&values, &options).map(Into::into).map_err(err)
}

#[pyfunction]
fn optimal_fd_interval(eps_f: f64, mu: f64) -> PyResult<f64> {
    core::optimal_fd_interval(eps_f, mu).map_err(err)
}

/// `B_1 .. B_m` for the curve through `points`.
#[pyfunction]
fn derivative_bound(points: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    let ps = core::PointSet::new(points).map_err(err)?;
    Ok(core::derivative_bound(&ps).per_order)
}

#[pyfunction]
#[pyo3(signature = (base, pool, m, reuse, h = 0.0, max_nodes = 10_000_000, time_limit = Some(10.0)))]
#[allow(clippy::too_many_arguments)]
fn solve_selection(
    py: Python<'_>,
    base: Vec<f64>,
    pool: Vec<Vec<f64>>,
    m: usize,
    reuse: usize,
    h: f64,
    max_nodes: u64,
    time_limit: Option<f64>,
) -> PyResult<PySelectionSolution> {
    let p = problem(base, pool, m, reuse, h, max_nodes, time_limit);
    let s = py.detach(|| core::solve_selection(&p)).map_err(err)?;
    solution_to_py(py, s)
}

#[pyfunction]
#[pyo3(signature = (base, pool, m, reuse, h = 0.0))]
fn brute_force_selection(
    py: Python<'_>,
    base: Vec<f64>,
    pool: Vec<Vec<f64>>,
    m: usize,
    reuse: usize,
    h: f64,
) -> PyResult<PySelectionSolution> {
    let p = problem(base, pool, m, reuse, h, u64::MAX, None);
    let s = py.detach(|| core::brute_force_selection(&p)).map_err(err)?;
    solution_to_py(py, s)
}

/// Returns `(statistic, p_value)`.
#[pyfunction]
fn ks_two_sample(a: Vec<f64>, b: Vec<f64>) -> PyResult<(f64, f64)> {
    let r = core::ks_two_sample(&a, &b).map_err(err)?;
    Ok((r.statistic, r.p_value))
}

/// Runs an experiment from a JSON config and returns the summary as JSON.
/// Writes the usual files when `out` is given.
#[pyfunction]
#[pyo3(signature = (config_json, threads = None, out = None))]
fn run_experiment(py: Python<'_>, config_json: &str, threads: Option<usize>, out: Option<String>) -> PyResult<String> {
    let cfg: core::ExperimentConfig =
        serde_json::from_str(config_json).map_err(|e| PyValueError::new_err(format!("config: {e}")))?;
    let run = py
        .detach(|| -> core::Result<_> {
            let run = core::run_experiment(&cfg, threads)?;
            if let Some(dir) = &out {
                run.write(std::path::Path::new(dir))?;
            }
            Ok(run)
        })
        .map_err(err)?;
    serde_json::to_string(&run.summary).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn noisetab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyNoiseEstimate>()?;
    m.add_class::<PyNewtonCurve>()?;
    m.add_class::<PySelectionSolution>()?;
    m.add_function(wrap_pyfunction!(difference_table, m)?)?;
    m.add_function(wrap_pyfunction!(gamma, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_noise, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_fd_interval, m)?)?;
    m.add_function(wrap_pyfunction!(derivative_bound, m)?)?;
    m.add_function(wrap_pyfunction!(solve_selection, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_selection, m)?)?;
    m.add_function(wrap_pyfunction!(ks_two_sample, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
