//! Python bindings for the `phasecache` engine.
//!
//! Configs cross the boundary as plain dicts with the same keys as the TOML
//! file. Vector data crosses as float64 buffers (numpy arrays): signatures
//! shaped `(segments, layers, heads, dim)` and blocks shaped
//! `(layers, heads, frames, dim)`. Errors raise `PhasecacheError` with
//! `args == (message, code, field)`.

use phasecache::config::{EngineFile, ScheduleFile, SimFile};
use phasecache::engine::{budget_report, Engine as CoreEngine, ReadSet};
use phasecache::sim::{export_inputs, run};
use phasecache::trace::{trace_to_string, TraceFormat};
use phasecache::vector::{project_motion_neutral_exact, project_motion_neutral_stabilized};
use phasecache::window::schedule_table;
use phasecache::{Error, SemanticVector};
use pyo3::buffer::PyBuffer;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde::de::DeserializeOwned;
use serde::Serialize;

create_exception!(phasecache_py, PhasecacheError, PyValueError, "Error raised by the phasecache engine.");

fn core_err(e: Error) -> PyErr {
    PhasecacheError::new_err((e.to_string(), e.code(), e.field().map(str::to_string)))
}

fn json_err(e: serde_json::Error) -> PyErr {
    core_err(Error::Serialize(e.to_string()))
}

/// Python object → serde type via `json.dumps`.
fn from_py<T: DeserializeOwned + Default>(obj: Option<&Bound<'_, PyAny>>) -> PyResult<T> {
    let Some(obj) = obj.filter(|o| !o.is_none()) else {
        return Ok(T::default());
    };
    let text: String = obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| core_err(Error::config("config", e.to_string())))
}

/// serde type → Python object via `json.loads`.
fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(json_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn read_buffer(py: Python<'_>, obj: &Bound<'_, PyAny>, what: &'static str, rank: usize) -> PyResult<(Vec<usize>, Vec<f64>)> {
    let buf = PyBuffer::<f64>::get(obj)
        .map_err(|_| core_err(Error::config(what, "expected a float64 buffer such as a numpy array")))?;
    let shape = buf.shape().to_vec();
    if shape.len() != rank {
        return Err(core_err(Error::ShapeMismatch {
            what,
            expected: vec![0; rank],
            actual: shape,
        }));
    }
    Ok((shape, buf.to_vec(py)?))
}

fn read_set_dict<'py>(py: Python<'py>, rs: &ReadSet) -> PyResult<Bound<'py, PyDict>> {
    let heads = PyList::empty(py);
    for h in &rs.heads {
        let d = PyDict::new(py);
        d.set_item("layer", h.layer)?;
        d.set_item("head", h.head)?;
        d.set_item("sink", h.sink.len())?;
        d.set_item("anchors", h.anchors.len())?;
        d.set_item("bridge", h.bridge.len())?;
        d.set_item("local", h.local.len())?;
        d.set_item("local_frames", h.local_frames.clone())?;
        d.set_item("budget", h.budget)?;
        heads.append(d)?;
    }
    let out = PyDict::new(py);
    out.set_item("window", rs.window)?;
    out.set_item("budget", rs.budget())?;
    out.set_item("total_budget", rs.total_budget())?;
    out.set_item("heads", heads)?;
    Ok(out)
}

/// Streaming memory engine driven one block at a time.
#[pyclass(name = "Engine", module = "phasecache_py")]
struct PyEngine {
    inner: CoreEngine,
}

#[pymethods]
impl PyEngine {
    #[new]
    #[pyo3(signature = (signatures, config=None, schedule=None))]
    fn new(
        py: Python<'_>,
        signatures: &Bound<'_, PyAny>,
        config: Option<&Bound<'_, PyAny>>,
        schedule: Option<&Bound<'_, PyAny>>,
    ) -> PyResult<Self> {
        let cfg = from_py::<EngineFile>(config)?.to_config().map_err(core_err)?;
        let schedule = from_py::<ScheduleFile>(schedule)?.to_schedule().map_err(core_err)?;
        let (shape, data) = read_buffer(py, signatures, "signatures", 4)?;
        let expected = vec![schedule.segment_count(), cfg.layers, cfg.heads, cfg.value_dim];
        if shape != expected {
            return Err(core_err(Error::ShapeMismatch {
                what: "signatures",
                expected,
                actual: shape,
            }));
        }
        let dim = cfg.value_dim;
        let sigs = data
            .chunks_exact(cfg.head_slots() * dim)
            .map(|seg| {
                seg.chunks_exact(dim)
                    .map(|c| SemanticVector::new(c.to_vec()))
                    .collect::<phasecache::Result<Vec<_>>>()
            })
            .collect::<phasecache::Result<Vec<_>>>()
            .map_err(core_err)?;
        let inner = CoreEngine::new(cfg, schedule, sigs).map_err(core_err)?;
        Ok(Self { inner })
    }

    /// Frames expected by the next `step`.
    #[getter]
    fn next_block_frames(&self) -> usize {
        self.inner.next_block_frames()
    }

    #[getter]
    fn blocks_done(&self) -> usize {
        self.inner.blocks_done()
    }

    #[getter]
    fn total_blocks(&self) -> usize {
        self.inner.total_blocks()
    }

    #[getter]
    fn is_finished(&self) -> bool {
        self.inner.is_finished()
    }

    /// Consumes one `(layers, heads, frames, dim)` block; returns
    /// `(read_set, trace_row)`.
    fn step<'py>(&mut self, py: Python<'py>, block: &Bound<'py, PyAny>) -> PyResult<(Bound<'py, PyDict>, Bound<'py, PyAny>)> {
        let (shape, data) = read_buffer(py, block, "block values", 4)?;
        let cfg = self.inner.config();
        let expected = vec![cfg.layers, cfg.heads, self.inner.next_block_frames(), cfg.value_dim];
        if !self.inner.is_finished() && shape != expected {
            return Err(core_err(Error::ShapeMismatch {
                what: "block values",
                expected,
                actual: shape,
            }));
        }
        let (rs, trace) = self.inner.step_block_flat(&data).map_err(core_err)?;
        Ok((read_set_dict(py, &rs)?, to_py(py, &trace)?))
    }

    fn traces<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.traces())
    }

    fn trace_csv(&self) -> PyResult<String> {
        trace_to_string(self.inner.traces(), TraceFormat::Csv).map_err(core_err)
    }

    fn trace_json(&self) -> PyResult<String> {
        trace_to_string(self.inner.traces(), TraceFormat::Json).map_err(core_err)
    }

    fn budget_report<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &budget_report(self.inner.traces()).map_err(core_err)?)
    }
}

/// Default configuration as a dict (same layout as the TOML file).
#[pyfunction]
fn default_config(py: Python<'_>) -> PyResult<Bound<'_, PyAny>> {
    to_py(py, &SimFile::default())
}

/// Seeded simulator inputs: flat signatures with their shape and one flat
/// buffer per block with its shape.
#[pyfunction]
#[pyo3(signature = (config=None))]
fn sim_inputs<'py>(py: Python<'py>, config: Option<&Bound<'py, PyAny>>) -> PyResult<Bound<'py, PyDict>> {
    let sim = from_py::<SimFile>(config)?.to_config().map_err(core_err)?;
    let inputs = export_inputs(&sim).map_err(core_err)?;
    let e = &sim.engine;
    let out = PyDict::new(py);
    out.set_item("signatures", inputs.signatures)?;
    out.set_item("signature_shape", inputs.signature_shape.to_vec())?;
    let shapes: Vec<Vec<usize>> = inputs
        .blocks
        .iter()
        .map(|b| vec![e.layers, e.heads, b.len() / (e.head_slots() * e.value_dim), e.value_dim])
        .collect();
    out.set_item("blocks", inputs.blocks)?;
    out.set_item("block_shapes", shapes)?;
    Ok(out)
}

/// Full in-process simulator run; returns the trace in `csv` or `json`.
#[pyfunction]
#[pyo3(signature = (config=None, format="csv"))]
fn simulate(config: Option<&Bound<'_, PyAny>>, format: &str) -> PyResult<String> {
    let sim = from_py::<SimFile>(config)?.to_config().map_err(core_err)?;
    let format: TraceFormat = format.parse().map_err(core_err)?;
    let result = run(&sim).map_err(core_err)?;
    trace_to_string(&result.traces, format).map_err(core_err)
}

/// Per-frame window schedule rows.
#[pyfunction]
#[pyo3(signature = (config=None))]
fn window_schedule<'py>(py: Python<'py>, config: Option<&Bound<'py, PyAny>>) -> PyResult<Bound<'py, PyAny>> {
    let sim = from_py::<SimFile>(config)?.to_config().map_err(core_err)?;
    to_py(py, &schedule_table(&sim.schedule, &sim.engine.window).map_err(core_err)?)
}

/// Removes the component of `delta` along `tangent`; with `eps` the
/// denominator is stabilized.
#[pyfunction]
#[pyo3(signature = (delta, tangent, eps=None))]
fn project(delta: Vec<f64>, tangent: Vec<f64>, eps: Option<f64>) -> PyResult<Vec<f64>> {
    let d = SemanticVector::new(delta).map_err(core_err)?;
    let m = SemanticVector::new(tangent).map_err(core_err)?;
    let p = match eps {
        Some(eps) => project_motion_neutral_stabilized(&d, &m, eps),
        None => project_motion_neutral_exact(&d, &m),
    };
    Ok(p.map_err(core_err)?.into_vec())
}

#[pymodule]
fn phasecache_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", phasecache::VERSION)?;
    m.add("PhasecacheError", m.py().get_type::<PhasecacheError>())?;
    m.add_class::<PyEngine>()?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(sim_inputs, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(window_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(project, m)?)?;
    Ok(())
}
