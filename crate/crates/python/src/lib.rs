//! Python bindings: `import txrisk`.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use txrisk::aging;
use txrisk::clustering::{self, kmeans_with_restarts};
use txrisk::error::Error;
use txrisk::estimation::{self, FarGuard};
use txrisk::features::FeatureSchema;
use txrisk::ingest::{self, SynthConfig};
use txrisk::riskassess::{self, AssessOptions, ThresholdSearch, DEFAULT_BUDGET};
use txrisk::thermal::{self, DayProfile, HOURS};

create_exception!(txrisk, TxriskError, PyException);

fn py_err(e: Error) -> PyErr {
    TxriskError::new_err(e.to_string())
}

fn day(values: &[f64], what: &str) -> PyResult<[f64; HOURS]> {
    values
        .try_into()
        .map_err(|_| PyValueError::new_err(format!("{what} needs {HOURS} hourly values, got {}", values.len())))
}

#[pyclass(name = "TransformerSpec", module = "txrisk", frozen)]
struct PySpec(thermal::TransformerSpec);

#[pymethods]
impl PySpec {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        thermal::TransformerSpec::from_json_str(text)
            .map(PySpec)
            .map_err(py_err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        thermal::TransformerSpec::load(path).map(PySpec).map_err(py_err)
    }

    #[getter]
    fn rated_kva(&self) -> f64 {
        self.0.rated_kva
    }

    #[getter]
    fn top_oil_limit(&self) -> f64 {
        self.0.top_oil_limit
    }

    #[getter]
    fn hotspot_limit(&self) -> f64 {
        self.0.hotspot_limit
    }

    #[getter]
    fn replacement_cost(&self) -> f64 {
        self.0.replacement_cost
    }

    /// Converged 24-hour temperatures for hourly ambient (°C) and per-unit load.
    fn simulate_day(&self, ambient: Vec<f64>, load_pu: Vec<f64>) -> PyResult<PyTrace> {
        let profile = DayProfile::new(&ambient, &load_pu).map_err(py_err)?;
        thermal::simulate_day(&self.0, &profile).map(PyTrace).map_err(py_err)
    }

    /// Largest scaling of a load shape that keeps both limits, as a dict.
    #[pyo3(signature = (load, ambient, tolerance = None))]
    fn loading_threshold<'py>(
        &self,
        py: Python<'py>,
        load: Vec<f64>,
        ambient: Vec<f64>,
        tolerance: Option<f64>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let mut search = ThresholdSearch::default();
        if let Some(t) = tolerance {
            search.tolerance = t;
        }
        let r = riskassess::loading_threshold(&self.0, 0, &day(&load, "load")?, &day(&ambient, "ambient")?, &search)
            .map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("max_avg_load_pu", r.max_avg_load_pu)?;
        d.set_item("max_peak_load_pu", r.max_peak_load_pu)?;
        d.set_item("binding_limit", r.binding_limit.label())?;
        d.set_item("top_oil_c", r.top_oil_c)?;
        d.set_item("hotspot_c", r.hotspot_c)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("TransformerSpec(rated_kva={})", self.0.rated_kva)
    }
}

#[pyclass(name = "ThermalTrace", module = "txrisk", frozen)]
struct PyTrace(thermal::ThermalTrace);

#[pymethods]
impl PyTrace {
    #[getter]
    fn top_oil(&self) -> Vec<f64> {
        self.0.top_oil.to_vec()
    }

    #[getter]
    fn hotspot(&self) -> Vec<f64> {
        self.0.hotspot.to_vec()
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.0.iterations
    }

    fn max_top_oil(&self) -> f64 {
        self.0.max_top_oil()
    }

    fn max_hotspot(&self) -> f64 {
        self.0.max_hotspot()
    }

    /// Life consumed over the day, in days.
    fn daily_life_loss(&self) -> f64 {
        aging::daily_life_loss(&self.0)
    }
}

#[pyclass(name = "ClusterModel", module = "txrisk", frozen)]
struct PyModel(clustering::ClusterModel);

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        clustering::ClusterModel::load(path).map(PyModel).map_err(py_err)
    }

    #[getter]
    fn k(&self) -> usize {
        self.0.k
    }

    #[getter]
    fn objective(&self) -> f64 {
        self.0.objective
    }

    #[getter]
    fn service_count(&self) -> usize {
        self.0.service_count
    }

    fn cluster_ids(&self) -> Vec<usize> {
        self.0.cluster_ids()
    }

    fn member_counts(&self) -> Vec<(usize, usize)> {
        self.0.clusters.iter().map(|c| (c.id, c.member_count)).collect()
    }

    /// Member records per cluster divided by the number of services.
    fn member_days(&self) -> Vec<(usize, f64)> {
        self.0.member_day_counts().into_iter().collect()
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        std::fs::write(&path, self.0.to_json())?;
        Ok(())
    }

    fn __repr__(&self) -> String {
        format!("ClusterModel(k={}, objective={:.4})", self.0.k, self.0.objective)
    }
}

#[pyfunction]
fn aging_acceleration(hotspot_c: f64) -> f64 {
    aging::aging_acceleration(hotspot_c)
}

#[pyfunction]
fn equivalent_aging(hourly_faa: Vec<f64>) -> PyResult<f64> {
    Ok(aging::equivalent_aging(&day(&hourly_faa, "hourly_faa")?))
}

#[pyfunction]
fn economic_loss(annual_loss_days: f64, replacement_cost: f64) -> f64 {
    aging::economic_loss(annual_loss_days, replacement_cost)
}

/// Writes synthetic weather.csv, meter.csv and calendar.csv into `out_dir`.
#[pyfunction]
#[pyo3(signature = (out_dir, seed = 0, services = 20, days = 730))]
fn synth(py: Python<'_>, out_dir: PathBuf, seed: u64, services: usize, days: usize) -> PyResult<Vec<PathBuf>> {
    let config = SynthConfig {
        services,
        days,
        ..SynthConfig::default()
    };
    let files = py
        .detach(|| ingest::synth_dataset(seed, &config, &out_dir))
        .map_err(py_err)?;
    Ok(vec![files.weather, files.meter, files.calendar])
}

/// Clusters the dataset in `data_dir` and attaches 24-hour profiles.
#[pyfunction]
#[pyo3(signature = (data_dir, k = 10, seed = 0, restarts = 1))]
fn cluster(py: Python<'_>, data_dir: PathBuf, k: usize, seed: u64, restarts: usize) -> PyResult<PyModel> {
    py.detach(|| {
        let dataset = ingest::load_dataset(
            data_dir.join("weather.csv"),
            data_dir.join("meter.csv"),
            data_dir.join("calendar.csv"),
        )?;
        let schema = FeatureSchema::default();
        let records = dataset.feature_vectors(&schema)?;
        let mut model = kmeans_with_restarts(&records, k, &schema, seed, restarts)?;
        let raw = dataset.raw_profiles();
        if !raw.is_empty() {
            model.profiles = clustering::extract_profiles(&model, &raw)?;
        }
        Ok(PyModel(model))
    })
    .map_err(py_err)
}

/// Service-count studies over `first..=last`; returns the headline numbers.
#[pyfunction]
#[pyo3(signature = (spec, model, first = 1, last = 40, budget = DEFAULT_BUDGET, years = None))]
fn assess<'py>(
    py: Python<'py>,
    spec: &PySpec,
    model: &PyModel,
    first: usize,
    last: usize,
    budget: f64,
    years: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let options = AssessOptions {
        search: ThresholdSearch::default(),
        n_range: first..=last,
        budget,
        years,
    };
    let report = py
        .detach(|| riskassess::assess(&spec.0, &model.0, &options))
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("max_services_by_temperature", report.temperature.max_services)?;
    d.set_item("max_services_by_life", report.life.max_services)?;
    let thresholds: Vec<(usize, f64, f64, usize, &str)> = report
        .thresholds
        .iter()
        .map(|t| {
            (
                t.cluster_id,
                t.max_avg_load_pu,
                t.max_peak_load_pu,
                t.impact_rank,
                t.binding_limit.label(),
            )
        })
        .collect();
    d.set_item("thresholds", thresholds)?;
    d.set_item("n_values", report.life.n_values.clone())?;
    d.set_item("max_top_oil", report.temperature.max_top_oil.clone())?;
    d.set_item("economic_loss", report.life.economic_loss.clone())?;
    Ok(d)
}

/// Per-day estimates for a query CSV; each row is
/// `(date, max_top_oil_c, life_loss_days, far_flag)`.
#[pyfunction]
#[pyo3(signature = (spec, model, query_path, services, strict = false))]
fn estimate(
    py: Python<'_>,
    spec: &PySpec,
    model: &PyModel,
    query_path: PathBuf,
    services: usize,
    strict: bool,
) -> PyResult<Vec<(String, f64, f64, bool)>> {
    let guard = if strict { FarGuard::Strict } else { FarGuard::Lenient };
    let rows = py
        .detach(|| {
            let days = estimation::load_queries(&query_path)?;
            estimation::estimate_days(&days, &model.0, &spec.0, services, guard)
        })
        .map_err(py_err)?;
    Ok(rows
        .into_iter()
        .map(|r| (r.query.date.to_string(), r.max_top_oil_c, r.life_loss_days, r.far_flag))
        .collect())
}

#[pymodule(name = "txrisk")]
fn txrisk_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("TxriskError", m.py().get_type::<TxriskError>())?;
    m.add_class::<PySpec>()?;
    m.add_class::<PyTrace>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(aging_acceleration, m)?)?;
    m.add_function(wrap_pyfunction!(equivalent_aging, m)?)?;
    m.add_function(wrap_pyfunction!(economic_loss, m)?)?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add_function(wrap_pyfunction!(cluster, m)?)?;
    m.add_function(wrap_pyfunction!(assess, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    Ok(())
}
