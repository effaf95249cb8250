//! Python bindings over the certificate library.
//!
//! Reports cross the boundary as plain dicts and lists mirroring the JSON
//! the command-line tool prints, so the same keys appear on both sides.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;
use serde_json::Value;

use curvecert::covariants::{case_for, span_check, DEFAULT_G_TERMS};
use curvecert::error::Error;
use curvecert::ffcore::DEFAULT_PRIME;
use curvecert::genericity::{run_check, GenericityInstance};
use curvecert::rep::{self, Candidate, DEFAULT_KAPPA};
use curvecert::table;

fn to_py_err(err: Error) -> PyErr {
    PyValueError::new_err(err.to_string())
}

fn json_to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    match v {
        Value::Null => Ok(py.None()),
        Value::Bool(b) => b.into_py_any(py),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_py_any(py)
            } else if let Some(u) = n.as_u64() {
                u.into_py_any(py)
            } else {
                n.as_f64().unwrap_or(f64::NAN).into_py_any(py)
            }
        }
        Value::String(s) => s.into_py_any(py),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_py_any(py)
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, val) in map {
                dict.set_item(k, json_to_py(py, val)?)?;
            }
            dict.into_py_any(py)
        }
    }
}

fn report_to_py<T: serde::Serialize>(py: Python<'_>, report: &T) -> PyResult<Py<PyAny>> {
    json_to_py(py, &serde_json::to_value(report).expect("report serializes"))
}

/// Dimension of the irreducible SL3 representation V(a, b).
#[pyfunction]
fn dim_irrep(a: u32, b: u32) -> u64 {
    rep::dim_irrep(a, b)
}

/// Clebsch-Gordan components of V(e,0) (x) V(0,f) as (a, b) pairs.
#[pyfunction]
fn decompose(e: u32, f: u32) -> Vec<(u32, u32)> {
    rep::decompose_tensor(e, f).components().iter().map(|w| (w.a, w.b)).collect()
}

/// Admissible double-bundle candidates at a degree, as a list of dicts.
#[pyfunction]
#[pyo3(signature = (d, kappa = DEFAULT_KAPPA))]
fn search(py: Python<'_>, d: u32, kappa: u64) -> PyResult<Py<PyAny>> {
    let found = rep::search_candidates(d, kappa, None).map_err(to_py_err)?;
    report_to_py(py, &found)
}

/// Coefficients of the projector evaluation polynomial as (num, den) strings.
#[pyfunction]
fn chi_coefficients(e: u32, f: u32, components: Vec<u32>) -> PyResult<Vec<(String, String)>> {
    let chi = curvecert::projops::chi_poly(e, f, &components).map_err(to_py_err)?;
    Ok(chi.coeffs.iter().map(|c| (c.numer().to_string(), c.denom().to_string())).collect())
}

/// Run the double-bundle genericity certificate; returns the verdict dict.
#[pyfunction]
#[pyo3(signature = (d, e = None, components = None, prime = DEFAULT_PRIME, seed = 0, kappa = DEFAULT_KAPPA))]
fn check_db(
    py: Python<'_>,
    d: u32,
    e: Option<u32>,
    components: Option<Vec<u32>>,
    prime: u64,
    seed: u64,
    kappa: u64,
) -> PyResult<Py<PyAny>> {
    let cand = match (e, components) {
        (Some(e), Some(cs)) => Candidate::new(d, e, cs, kappa).map_err(to_py_err)?,
        (e, None) => rep::search_candidates(d, kappa, e.map(|e| e..=e))
            .map_err(to_py_err)?
            .into_iter()
            .next()
            .ok_or_else(|| {
                PyValueError::new_err(format!("no admissible candidate at degree {d}"))
            })?,
        (None, Some(_)) => return Err(PyValueError::new_err("components need e")),
    };
    let verdict = run_check(&GenericityInstance::new(cand, prime, seed)).map_err(to_py_err)?;
    report_to_py(py, &verdict)
}

/// Run the covariant spanning check; returns the report dict.
#[pyfunction]
#[pyo3(signature = (d, prime = DEFAULT_PRIME, seed = 0, samples = None, g_terms = DEFAULT_G_TERMS))]
fn check_cov(
    py: Python<'_>,
    d: u32,
    prime: u64,
    seed: u64,
    samples: Option<usize>,
    g_terms: usize,
) -> PyResult<Py<PyAny>> {
    let needed = case_for(d).map_err(to_py_err)?.needed as usize;
    let report =
        span_check(d, prime, seed, samples.unwrap_or(2 * needed), g_terms).map_err(to_py_err)?;
    report_to_py(py, &report)
}

/// The per-degree rationality record up to a degree, as a list of dicts.
#[pyfunction]
#[pyo3(signature = (to = 48))]
fn table_rows(py: Python<'_>, to: u32) -> PyResult<Py<PyAny>> {
    let rows = table::rows(to).map_err(to_py_err)?;
    report_to_py(py, &rows)
}

/// Degrees up to `to` whose rationality is still open.
#[pyfunction]
#[pyo3(signature = (to = 48))]
fn unknown_degrees(to: u32) -> Vec<u32> {
    table::unknown_degrees(to)
}

/// Finite-field certificates for rationality of plane-curve moduli.
#[pymodule]
fn curvecert_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(dim_irrep, m)?)?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(search, m)?)?;
    m.add_function(wrap_pyfunction!(chi_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(check_db, m)?)?;
    m.add_function(wrap_pyfunction!(check_cov, m)?)?;
    m.add_function(wrap_pyfunction!(table_rows, m)?)?;
    m.add_function(wrap_pyfunction!(unknown_degrees, m)?)?;
    m.add("DEFAULT_PRIME", DEFAULT_PRIME)?;
    m.add("DEFAULT_KAPPA", DEFAULT_KAPPA)?;
    Ok(())
}
