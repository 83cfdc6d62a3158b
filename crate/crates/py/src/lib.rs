//! Python bindings for the resilience index toolkit: the core record type,
//! scoring, classification, correlation, and the config-driven pipeline
//! entry points.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyModule;

use dri_core::classify::{classify, ClassAssignment};
use dri_core::config::{IndexConfig, NormalizationDomain, RunConfig};
use dri_core::error::Error;
use dri_core::fips::Fips;
use dri_core::index::{compute_all, DriResult};
use dri_core::ingest::CountyRecord;
use dri_core::pipeline;

fn to_py_err(error: Error) -> PyErr {
    match error {
        Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse_fips(raw: &str) -> PyResult<Fips> {
    Fips::parse(raw).map_err(PyValueError::new_err)
}

/// One county's raw inputs.
#[pyclass(name = "CountyRecord", frozen, from_py_object)]
#[derive(Clone)]
struct PyCountyRecord {
    inner: CountyRecord,
}

#[pymethods]
impl PyCountyRecord {
    #[new]
    #[pyo3(signature = (fips, population, income, svi, name = String::new(), state = String::new()))]
    fn new(
        fips: &str,
        population: u64,
        income: f64,
        svi: f64,
        name: String,
        state: String,
    ) -> PyResult<Self> {
        if !(income.is_finite() && income > 0.0) {
            return Err(PyValueError::new_err("income must be positive"));
        }
        if !(0.0..=1.0).contains(&svi) {
            return Err(PyValueError::new_err("svi must lie in [0, 1]"));
        }
        Ok(PyCountyRecord {
            inner: CountyRecord {
                fips: parse_fips(fips)?,
                name,
                state,
                population,
                income,
                svi,
            },
        })
    }

    #[getter]
    fn fips(&self) -> String {
        self.inner.fips.to_string()
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn state(&self) -> String {
        self.inner.state.clone()
    }

    #[getter]
    fn population(&self) -> u64 {
        self.inner.population
    }

    #[getter]
    fn income(&self) -> f64 {
        self.inner.income
    }

    #[getter]
    fn svi(&self) -> f64 {
        self.inner.svi
    }

    fn __repr__(&self) -> String {
        format!(
            "CountyRecord(fips='{}', population={}, income={}, svi={})",
            self.inner.fips, self.inner.population, self.inner.income, self.inner.svi
        )
    }
}

/// One county's normalized components and composite score.
#[pyclass(name = "DriResult", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDriResult {
    inner: DriResult,
}

#[pymethods]
impl PyDriResult {
    #[getter]
    fn fips(&self) -> String {
        self.inner.fips.to_string()
    }

    #[getter]
    fn pop_norm(&self) -> f64 {
        self.inner.pop_norm
    }

    #[getter]
    fn income_norm_inverted(&self) -> f64 {
        self.inner.income_norm_inverted
    }

    #[getter]
    fn svi(&self) -> f64 {
        self.inner.svi
    }

    #[getter]
    fn dri(&self) -> f64 {
        self.inner.dri
    }

    #[getter]
    fn dri_complement(&self) -> f64 {
        self.inner.dri_complement
    }

    fn __repr__(&self) -> String {
        format!("DriResult(fips='{}', dri={})", self.inner.fips, self.inner.dri)
    }
}

/// One county's quantile class.
#[pyclass(name = "ClassAssignment", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyClassAssignment {
    inner: ClassAssignment,
}

#[pymethods]
impl PyClassAssignment {
    #[getter]
    fn fips(&self) -> String {
        self.inner.fips.to_string()
    }

    #[getter]
    fn value(&self) -> f64 {
        self.inner.value
    }

    #[getter]
    fn class_index(&self) -> usize {
        self.inner.class_index
    }

    #[getter]
    fn class_label(&self) -> String {
        self.inner.class_label.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "ClassAssignment(fips='{}', class_index={}, class_label='{}')",
            self.inner.fips, self.inner.class_index, self.inner.class_label
        )
    }
}

/// (value - lo) / (hi - lo), clamped to [0, 1].
#[pyfunction]
fn min_max_normalize(value: f64, lo: f64, hi: f64) -> PyResult<f64> {
    dri_core::index::min_max_normalize(value, lo, hi).map_err(to_py_err)
}

/// Nearest-rank quantile break values at j/k for j = 1..k-1.
#[pyfunction]
fn quantile_breaks(values: Vec<f64>, k: usize) -> PyResult<Vec<f64>> {
    dri_core::classify::quantile_breaks(&values, k).map_err(to_py_err)
}

/// Classify a {fips: value} mapping into k ordered classes.
#[pyfunction]
#[pyo3(signature = (values, k = 5, labels = None))]
fn classify_values(
    values: BTreeMap<String, f64>,
    k: usize,
    labels: Option<Vec<String>>,
) -> PyResult<Vec<PyClassAssignment>> {
    let keyed: BTreeMap<Fips, f64> = values
        .into_iter()
        .map(|(raw, value)| Ok((parse_fips(&raw)?, value)))
        .collect::<PyResult<_>>()?;
    let labels = match labels {
        Some(labels) => labels,
        None if k == 5 => dri_core::classify::FIVE_CLASS_LABELS
            .iter()
            .map(|s| s.to_string())
            .collect(),
        None => {
            return Err(PyValueError::new_err(
                "labels are required when k is not 5",
            ))
        }
    };
    let assignments = classify(&keyed, k, &labels).map_err(to_py_err)?;
    Ok(assignments
        .into_iter()
        .map(|inner| PyClassAssignment { inner })
        .collect())
}

/// Spearman rank correlation with average ranks for ties.
#[pyfunction]
fn spearman(xs: Vec<f64>, ys: Vec<f64>) -> PyResult<f64> {
    dri_core::compare::spearman(&xs, &ys).map_err(to_py_err)
}

/// Score every record; bounds come from all records, or from the analysis
/// subset when `subset_domain` is set.
#[pyfunction]
#[pyo3(signature = (records, weight = None, analysis_fips = None, subset_domain = false))]
fn compute_dri(
    records: Vec<PyCountyRecord>,
    weight: Option<f64>,
    analysis_fips: Option<Vec<String>>,
    subset_domain: bool,
) -> PyResult<Vec<PyDriResult>> {
    let records: Vec<CountyRecord> = records.into_iter().map(|r| r.inner).collect();
    let analysis_fips = analysis_fips
        .unwrap_or_default()
        .iter()
        .map(|raw| parse_fips(raw))
        .collect::<PyResult<Vec<Fips>>>()?;
    let config = IndexConfig {
        weight: weight.unwrap_or(dri_core::config::EQUAL_WEIGHT),
        normalization_domain: if subset_domain {
            NormalizationDomain::AnalysisSubset
        } else {
            NormalizationDomain::FullDataset
        },
        analysis_fips,
        ..IndexConfig::default()
    };
    let output = compute_all(&records, &config).map_err(to_py_err)?;
    Ok(output
        .results
        .into_iter()
        .map(|inner| PyDriResult { inner })
        .collect())
}

fn load_config(config_path: &str, out_dir: Option<String>) -> PyResult<RunConfig> {
    let mut config = RunConfig::from_path(&PathBuf::from(config_path)).map_err(to_py_err)?;
    if let Some(out) = out_dir {
        config.output_dir = PathBuf::from(out);
    }
    Ok(config)
}

fn json_to_py(py: Python<'_>, value: &impl serde::Serialize) -> PyResult<Py<PyAny>> {
    let raw = serde_json::to_string(value)
        .map_err(|e| PyValueError::new_err(format!("serialization failed: {e}")))?;
    let json = py.import("json")?;
    Ok(json.call_method1("loads", (raw,))?.unbind())
}

/// Parse and join all configured inputs; returns the validation report as a
/// dict (see `findings` for the count of notable conditions).
#[pyfunction]
#[pyo3(signature = (config_path))]
fn run_validate(py: Python<'_>, config_path: &str) -> PyResult<Py<PyAny>> {
    let config = load_config(config_path, None)?;
    let report = pipeline::run_validate(&config).map_err(to_py_err)?;
    let mut value = serde_json::to_value(&report)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    value["findings"] = serde_json::Value::from(report.findings());
    json_to_py(py, &value)
}

/// Run the full pipeline, writing results CSV, GeoJSON, and manifest.
/// Returns a summary dict.
#[pyfunction]
#[pyo3(signature = (config_path, out_dir = None))]
fn run_compute(py: Python<'_>, config_path: &str, out_dir: Option<String>) -> PyResult<Py<PyAny>> {
    let config = load_config(config_path, out_dir)?;
    let summary = pipeline::run_compute(&config).map_err(to_py_err)?;
    json_to_py(py, &summary)
}

/// Compare against the configured FEMA risk index input and write the
/// comparison report. Returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (config_path, out_dir = None))]
fn run_compare(py: Python<'_>, config_path: &str, out_dir: Option<String>) -> PyResult<Py<PyAny>> {
    let config = load_config(config_path, out_dir)?;
    let (report, _) = pipeline::run_compare(&config).map_err(to_py_err)?;
    json_to_py(py, &report)
}

#[pymodule]
fn dri_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyCountyRecord>()?;
    m.add_class::<PyDriResult>()?;
    m.add_class::<PyClassAssignment>()?;
    m.add_function(wrap_pyfunction!(min_max_normalize, m)?)?;
    m.add_function(wrap_pyfunction!(quantile_breaks, m)?)?;
    m.add_function(wrap_pyfunction!(classify_values, m)?)?;
    m.add_function(wrap_pyfunction!(spearman, m)?)?;
    m.add_function(wrap_pyfunction!(compute_dri, m)?)?;
    m.add_function(wrap_pyfunction!(run_validate, m)?)?;
    m.add_function(wrap_pyfunction!(run_compute, m)?)?;
    m.add_function(wrap_pyfunction!(run_compare, m)?)?;
    Ok(())
}
