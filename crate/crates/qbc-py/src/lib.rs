//! Python bindings for `qbc-core`, importable as `qbclab`.
//!
//! Configs, specs and results cross the boundary as JSON text, in the same
//! schema the `qbc` binary reads and writes.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use qbc_core::adversary::{parity_concealing_closed_form, parity_fidelity_closed_form};
use qbc_core::harness::{self, run_experiment, ExperimentSpec};
use qbc_core::linalg::{self, CMatrix, DensityOp, C64};
use qbc_core::protocol::{self, AdamStrategy, BabeStrategy, Play, ProtocolConfig};
use qbc_core::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Spec(_) | Error::InvalidParameter(_) | Error::Json(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn density(rows: Vec<Vec<C64>>) -> PyResult<DensityOp> {
    let d = rows.len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    DensityOp::new(CMatrix::from_fn(d, d, |i, j| rows[i][j]), vec![d]).map_err(py_err)
}

fn play(json: Option<&str>) -> PyResult<Play> {
    json.map_or(Ok(Play::Honest), |s| serde_json::from_str(s).map_err(|e| py_err(e.into())))
}

/// Smallest n0 with (1 - epsilon1)^n0 <= 4 epsilon^2.
#[pyfunction]
fn solve_n0(epsilon: f64, epsilon1: f64) -> PyResult<u64> {
    protocol::solve_n0(epsilon, epsilon1).map_err(py_err)
}

#[pyfunction]
fn choose_theta(epsilon: f64) -> f64 {
    protocol::choose_theta(epsilon)
}

/// Babe's optimal guess probability against the n-qubit parity encoding.
#[pyfunction]
fn parity_concealing(n: usize, epsilon1: f64) -> f64 {
    parity_concealing_closed_form(n, epsilon1)
}

#[pyfunction]
fn parity_fidelity(n: usize, epsilon1: f64) -> f64 {
    parity_fidelity_closed_form(n, epsilon1)
}

/// Optimal success probability for telling two equiprobable density matrices apart.
#[pyfunction]
fn helstrom(rho0: Vec<Vec<C64>>, rho1: Vec<Vec<C64>>) -> PyResult<f64> {
    linalg::helstrom(&density(rho0)?, &density(rho1)?).map_err(py_err)
}

#[pyfunction]
fn trace_distance(rho0: Vec<Vec<C64>>, rho1: Vec<Vec<C64>>) -> PyResult<f64> {
    linalg::trace_distance(&density(rho0)?, &density(rho1)?).map_err(py_err)
}

#[pyfunction]
fn fidelity(rho: Vec<Vec<C64>>, sigma: Vec<Vec<C64>>) -> PyResult<f64> {
    linalg::fidelity(&density(rho)?, &density(sigma)?).map_err(py_err)
}

/// Runs one protocol instance and returns the outcome as JSON.
///
/// `adam` and `babe` are strategy JSON ("Honest" or a cheat object); both
/// default to honest play.
#[pyfunction]
#[pyo3(signature = (config, bit=0, adam=None, babe=None))]
fn run_protocol(py: Python<'_>, config: &str, bit: u8, adam: Option<&str>, babe: Option<&str>) -> PyResult<String> {
    let config = ProtocolConfig::from_json(config).map_err(py_err)?;
    let adam = AdamStrategy { bit, play: play(adam)? };
    let babe = BabeStrategy { play: play(babe)? };
    let out = py.detach(|| protocol::run_protocol(&config, &adam, &babe)).map_err(py_err)?;
    serde_json::to_string(&out).map_err(|e| py_err(e.into()))
}

/// Runs an experiment spec and returns the report text.
#[pyfunction]
#[pyo3(signature = (spec, format="json"))]
fn run_spec(py: Python<'_>, spec: &str, format: &str) -> PyResult<String> {
    let spec = ExperimentSpec::from_json(spec).map_err(py_err)?;
    let result = py.detach(|| run_experiment(&spec)).map_err(py_err)?;
    match format {
        "json" => harness::to_json(&result),
        "csv" => harness::to_csv(&result),
        other => return Err(PyValueError::new_err(format!("unknown format {other:?}"))),
    }
    .map_err(py_err)
}

/// The invariant suite as (name, passed, detail) triples.
#[pyfunction]
#[pyo3(signature = (seed=1, trials=2000))]
fn verify(py: Python<'_>, seed: u64, trials: u64) -> PyResult<Vec<(String, bool, String)>> {
    let checks = py.detach(|| harness::verify_suite(seed, trials)).map_err(py_err)?;
    Ok(checks.into_iter().map(|c| (c.name.to_string(), c.passed, c.detail)).collect())
}

#[pymodule]
fn qbclab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("SCHEMA_VERSION", harness::SCHEMA_VERSION)?;
    m.add_function(wrap_pyfunction!(solve_n0, m)?)?;
    m.add_function(wrap_pyfunction!(choose_theta, m)?)?;
    m.add_function(wrap_pyfunction!(parity_concealing, m)?)?;
    m.add_function(wrap_pyfunction!(parity_fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(helstrom, m)?)?;
    m.add_function(wrap_pyfunction!(trace_distance, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(run_protocol, m)?)?;
    m.add_function(wrap_pyfunction!(run_spec, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
