//! Python bindings: a `TaskSystem` class plus free functions mirroring the
//! CLI subcommands. Structured reports come back as plain dicts/lists with
//! rationals encoded as exact "p/q" strings (feed them to
//! `fractions.Fraction`), so no numeric precision is lost at the boundary.

use std::fmt::Display;
use std::str::FromStr;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;
use serde::Serialize;
use serde_json::Value;

use suspan::exact::{ExactStatus, PruneFlags, SearchConfig};
use suspan::gap::GapFamilyParams;
use suspan::hardness::{PartitionInstance, ReductionVariant};
use suspan::milp::{MilpAssignment, MilpVariant};
use suspan::rta::OrdinaryRta;
use suspan::sim::ReleasePattern;
use suspan::Time;

fn errv(e: impl Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_time(s: &str, what: &str) -> PyResult<Time> {
    Time::from_str(s).map_err(|e| errv(format!("{what}: {e}")))
}

fn to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    Ok(match v {
        Value::Null => py.None(),
        Value::Bool(b) => (*b).into_py_any(py)?,
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_py_any(py)?
            } else if let Some(u) = n.as_u64() {
                u.into_py_any(py)?
            } else {
                n.as_f64().expect("JSON number fits f64").into_py_any(py)?
            }
        }
        Value::String(s) => s.as_str().into_py_any(py)?,
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(to_py(py, item)?)?;
            }
            list.into_py_any(py)?
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, val) in map {
                dict.set_item(k, to_py(py, val)?)?;
            }
            dict.into_py_any(py)?
        }
    })
}

fn report_to_py<T: Serialize>(py: Python<'_>, report: &T) -> PyResult<Py<PyAny>> {
    let v = serde_json::to_value(report).map_err(errv)?;
    to_py(py, &v)
}

fn parse_variant(s: &str) -> PyResult<MilpVariant> {
    Ok(match s {
        "full" => MilpVariant::Full,
        "no-bounds" => MilpVariant::NoBounds,
        "no-rel" => MilpVariant::NoRel,
        "v1" => MilpVariant::V1,
        _ => return Err(errv(format!("unknown variant {s:?} (full, no-bounds, no-rel, v1)"))),
    })
}

fn parse_reduction_variant(s: &str) -> PyResult<ReductionVariant> {
    Ok(match s {
        "constrained" => ReductionVariant::Constrained,
        "implicit" => ReductionVariant::Implicit,
        "footnote-2v" => ReductionVariant::Footnote2V,
        _ => {
            return Err(errv(format!("unknown variant {s:?} (constrained, implicit, footnote-2v)")))
        }
    })
}

/// A fixed-priority task system: ordinary higher-priority tasks plus one
/// lowest-priority segmented self-suspending task.
#[pyclass(frozen, name = "TaskSystem", module = "suspan_py")]
struct PyTaskSystem {
    inner: suspan::TaskSystem,
}

#[pymethods]
impl PyTaskSystem {
    /// Parse the JSON task-set format.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(errv)?;
        Ok(Self { inner })
    }

    /// Load a .json or .toml task-set file.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let inner = suspan::load_task_system(path).map_err(errv)?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.inner).map_err(errv)
    }

    /// Write a .json or .toml task-set file.
    fn save(&self, path: &str) -> PyResult<()> {
        suspan::save_task_system(&self.inner, path).map_err(errv)
    }

    #[getter]
    fn num_hp_tasks(&self) -> usize {
        self.inner.hp_tasks().len()
    }

    #[getter]
    fn num_segments(&self) -> usize {
        self.inner.ss_task().num_segments()
    }

    /// Total utilization as a "p/q" string.
    #[getter]
    fn utilization(&self) -> String {
        self.inner.utilization().to_string()
    }

    /// Utilization of the higher-priority tasks alone.
    #[getter]
    fn hp_utilization(&self) -> String {
        self.inner.hp_utilization().to_string()
    }

    fn __repr__(&self) -> String {
        format!(
            "TaskSystem({} hp tasks, {} segments, utilization {})",
            self.num_hp_tasks(),
            self.num_segments(),
            self.utilization()
        )
    }
}

/// Response time of one ordinary task: dict with verdict ("ok" or "miss"),
/// response, and the missing job index if any.
#[pyfunction]
fn wcrt_ordinary(py: Python<'_>, ts: &PyTaskSystem, id: u32) -> PyResult<Py<PyAny>> {
    #[derive(Serialize)]
    struct Report {
        verdict: &'static str,
        response: Time,
        #[serde(skip_serializing_if = "Option::is_none")]
        job: Option<u64>,
    }
    let report = match suspan::rta::wcrt_ordinary(&ts.inner, id).map_err(errv)? {
        OrdinaryRta::Schedulable { wcrt } => Report { verdict: "ok", response: wcrt, job: None },
        OrdinaryRta::DeadlineMiss { job_index, response } => {
            Report { verdict: "miss", response, job: Some(job_index) }
        }
    };
    report_to_py(py, &report)
}

#[derive(Serialize)]
struct ExactReport {
    verdict: &'static str,
    response: Option<Time>,
    exact: Option<bool>,
    evals: u64,
    witness: Option<ReleasePattern>,
}

/// Exact worst-case response time of the suspending task.
#[pyfunction]
#[pyo3(signature = (ts, cap=None, grid=None, no_prune=false))]
fn exact_wcrt(
    py: Python<'_>,
    ts: &PyTaskSystem,
    cap: Option<u64>,
    grid: Option<&str>,
    no_prune: bool,
) -> PyResult<Py<PyAny>> {
    let cfg = SearchConfig {
        prune: if no_prune { PruneFlags::none() } else { PruneFlags::default() },
        max_evals: cap,
        grid: grid.map(|g| parse_time(g, "grid")).transpose()?,
    };
    let res = suspan::exact::exact_wcrt(&ts.inner, &cfg).map_err(errv)?;
    let report = match res.status {
        ExactStatus::Schedulable { wcrt, witness } => ExactReport {
            verdict: "schedulable",
            response: Some(wcrt),
            exact: Some(true),
            evals: res.evals,
            witness: Some(witness),
        },
        ExactStatus::DeadlineMiss { response, exact, witness } => ExactReport {
            verdict: "deadline-miss",
            response: Some(response),
            exact: Some(exact),
            evals: res.evals,
            witness: Some(witness),
        },
        ExactStatus::Aborted { best } => ExactReport {
            verdict: "aborted",
            response: best,
            exact: None,
            evals: res.evals,
            witness: None,
        },
    };
    report_to_py(py, &report)
}

/// Simulate an explicit release pattern (JSON string); returns the trace.
#[pyfunction]
#[pyo3(signature = (ts, pattern, horizon=None))]
fn simulate(
    py: Python<'_>,
    ts: &PyTaskSystem,
    pattern: &str,
    horizon: Option<&str>,
) -> PyResult<Py<PyAny>> {
    let rp: ReleasePattern = serde_json::from_str(pattern).map_err(errv)?;
    let horizon = horizon.map(|h| parse_time(h, "horizon")).transpose()?;
    let trace = suspan::sim::simulate(&ts.inner, &rp, horizon).map_err(errv)?;
    report_to_py(py, &trace)
}

/// Maximize the per-window interference model; returns objective, status
/// ("optimal" or "lower-bound"), node count, and the best point.
#[pyfunction]
#[pyo3(signature = (ts, variant="full", budget=10_000_000))]
fn milp_solve(
    py: Python<'_>,
    ts: &PyTaskSystem,
    variant: &str,
    budget: u64,
) -> PyResult<Py<PyAny>> {
    let model = suspan::milp::build_model(&ts.inner, parse_variant(variant)?).map_err(errv)?;
    let sol = suspan::milp::solve(&model, budget).map_err(errv)?;
    report_to_py(py, &sol)
}

/// Check a candidate assignment (JSON string) against the model.
#[pyfunction]
#[pyo3(signature = (ts, assignment, variant="full"))]
fn milp_check(
    py: Python<'_>,
    ts: &PyTaskSystem,
    assignment: &str,
    variant: &str,
) -> PyResult<Py<PyAny>> {
    let model = suspan::milp::build_model(&ts.inner, parse_variant(variant)?).map_err(errv)?;
    let a: MilpAssignment = serde_json::from_str(assignment).map_err(errv)?;
    let report = suspan::milp::check_assignment(&model, &a).map_err(errv)?;
    report_to_py(py, &report)
}

/// Render the model in LP format.
#[pyfunction]
#[pyo3(signature = (ts, variant="full"))]
fn export_lp(ts: &PyTaskSystem, variant: &str) -> PyResult<String> {
    let model = suspan::milp::build_model(&ts.inner, parse_variant(variant)?).map_err(errv)?;
    suspan::milp::export_lp(&model).map_err(errv)
}

/// Upper bounds on the suspending task's response time.
#[pyfunction]
fn split_bound(ts: &PyTaskSystem) -> PyResult<String> {
    Ok(suspan::gap::split_bound(&ts.inner).map_err(errv)?.to_string())
}

#[pyfunction]
fn joint_bound(ts: &PyTaskSystem) -> PyResult<String> {
    Ok(suspan::gap::joint_bound(&ts.inner).map_err(errv)?.to_string())
}

/// Encode a 3-partition instance (3m values summing to m*v per triple)
/// as a task system whose suspending task misses a deadline iff the
/// instance is solvable.
#[pyfunction]
#[pyo3(signature = (m, v, values, variant="constrained"))]
fn build_reduction(m: usize, v: i128, values: Vec<i128>, variant: &str) -> PyResult<PyTaskSystem> {
    let inst = PartitionInstance::new(m, v, values).map_err(errv)?;
    let inner = suspan::hardness::build_reduction(&inst, parse_reduction_variant(variant)?);
    Ok(PyTaskSystem { inner })
}

/// Verify one instance along independent routes (partition search,
/// exhaustive response sweep, scheduling of two reduction variants) and
/// report all verdicts; raises if any pair disagrees.
#[pyfunction]
fn cross_check_reduction(
    py: Python<'_>,
    m: usize,
    v: i128,
    values: Vec<i128>,
) -> PyResult<Py<PyAny>> {
    let inst = PartitionInstance::new(m, v, values).map_err(errv)?;
    let report = suspan::hardness::cross_check_reduction(&inst).map_err(errv)?;
    report_to_py(py, &report)
}

/// Bounds-versus-truth report for the pessimism family at (q, m).
#[pyfunction]
#[pyo3(signature = (q, m, eps=None))]
fn gap_report(py: Python<'_>, q: i128, m: usize, eps: Option<&str>) -> PyResult<Py<PyAny>> {
    let p = match eps {
        Some(e) => GapFamilyParams::with_eps(q, m, parse_time(e, "eps")?),
        None => GapFamilyParams::new(q, m),
    }
    .map_err(errv)?;
    let report = suspan::gap::ratio_report(&p).map_err(errv)?;
    report_to_py(py, &report)
}

#[pymodule]
fn suspan_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTaskSystem>()?;
    m.add_function(wrap_pyfunction!(wcrt_ordinary, m)?)?;
    m.add_function(wrap_pyfunction!(exact_wcrt, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(milp_solve, m)?)?;
    m.add_function(wrap_pyfunction!(milp_check, m)?)?;
    m.add_function(wrap_pyfunction!(export_lp, m)?)?;
    m.add_function(wrap_pyfunction!(split_bound, m)?)?;
    m.add_function(wrap_pyfunction!(joint_bound, m)?)?;
    m.add_function(wrap_pyfunction!(build_reduction, m)?)?;
    m.add_function(wrap_pyfunction!(cross_check_reduction, m)?)?;
    m.add_function(wrap_pyfunction!(gap_report, m)?)?;
    Ok(())
}
