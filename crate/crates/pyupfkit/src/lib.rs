//! Python bindings for the pipeline: corpus handling, group selection,
//! the statistics helpers, classifier evaluation, and full pipeline runs.
//!
//! Structured results cross the boundary as plain dicts and lists built
//! from the same serialization the CLI artifacts use, so Python sees
//! exactly what lands in the JSON files.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyFloat, PyList, PyModule, PyString};
use serde::Serialize;
use serde_json::Value;

use upfkit::analysis::{quartile_summary, welch_t_test};
use upfkit::bot::{filter_bots, load_bot_scores};
use upfkit::config::PipelineConfig;
use upfkit::corpus::{load_corpus, Corpus};
use upfkit::features::{fit_pca, FeatureManifest};
use upfkit::grouping::{partition_users, select_groups, GroupingConfig};
use upfkit::ml::{repeated_holdout, Algorithm, Dataset, Hyperparameters};
use upfkit::pipeline;
use upfkit::synth::{self, SynthConfig};

fn err_to_py(e: upfkit::Error) -> PyErr {
    match &e {
        upfkit::Error::Io { .. } | upfkit::Error::MissingArtifact(_) => {
            PyIOError::new_err(e.to_string())
        }
        upfkit::Error::Invariant(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn value_to_py(py: Python<'_>, value: &Value) -> PyResult<Py<PyAny>> {
    Ok(match value {
        Value::Null => py.None(),
        Value::Bool(b) => PyBool::new(py, *b).to_owned().into_any().unbind(),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_pyobject(py)?.into_any().unbind()
            } else if let Some(u) = n.as_u64() {
                u.into_pyobject(py)?.into_any().unbind()
            } else {
                PyFloat::new(py, n.as_f64().unwrap_or(f64::NAN))
                    .into_any()
                    .unbind()
            }
        }
        Value::String(s) => PyString::new(py, s).into_any().unbind(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(value_to_py(py, item)?)?;
            }
            list.into_any().unbind()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, v) in map {
                dict.set_item(k, value_to_py(py, v)?)?;
            }
            dict.into_any().unbind()
        }
    })
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let json = serde_json::to_value(value)
        .map_err(|e| PyRuntimeError::new_err(format!("serialization failed: {e}")))?;
    value_to_py(py, &json)
}

fn parse_date(text: &str) -> PyResult<NaiveDate> {
    NaiveDate::parse_from_str(text, "%Y-%m-%d")
        .map_err(|e| PyValueError::new_err(format!("bad date {text:?}: {e}")))
}

/// A loaded user/news/shares/tweets corpus.
#[pyclass(name = "Corpus", frozen)]
struct PyCorpus {
    inner: Corpus,
}

#[pymethods]
impl PyCorpus {
    #[getter]
    fn user_count(&self) -> usize {
        self.inner.users.len()
    }

    #[getter]
    fn news_count(&self) -> usize {
        self.inner.news.len()
    }

    #[getter]
    fn share_count(&self) -> usize {
        self.inner.shares.len()
    }

    #[getter]
    fn tweet_count(&self) -> usize {
        self.inner.tweets.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Corpus(users={}, news={}, shares={}, tweets={})",
            self.inner.users.len(),
            self.inner.news.len(),
            self.inner.shares.len(),
            self.inner.tweets.len()
        )
    }

    /// Remove users with bot score above `threshold`; returns the filtered
    /// corpus and a stats dict.
    #[pyo3(signature = (bot_scores, threshold = 0.5))]
    fn filter_bots(
        &self,
        py: Python<'_>,
        bot_scores: PathBuf,
        threshold: f64,
    ) -> PyResult<(PyCorpus, Py<PyAny>)> {
        let table = load_bot_scores(&bot_scores).map_err(err_to_py)?;
        let (filtered, stats) = filter_bots(&self.inner, &table, threshold).map_err(err_to_py)?;
        Ok((PyCorpus { inner: filtered }, to_py(py, &stats)?))
    }

    /// Counts of users sharing only fake, only real, or both kinds of news.
    fn partition(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let partition = partition_users(&self.inner);
        to_py(py, &partition)
    }

    /// Select the fake-news and real-news spreader groups.
    #[pyo3(signature = (k = 10_000, t = 0.2, seed = 42))]
    fn select_groups(&self, py: Python<'_>, k: usize, t: f64, seed: u64) -> PyResult<Py<PyAny>> {
        let config = GroupingConfig {
            k,
            t,
            sample_seed: seed,
        };
        config.validate().map_err(err_to_py)?;
        let selection = select_groups(&self.inner, &config).map_err(err_to_py)?;
        to_py(py, &selection)
    }
}

/// Load a corpus from the four JSONL files.
#[pyfunction]
#[pyo3(signature = (users, news, shares, tweets, reference_date = "2024-01-01"))]
fn load(
    users: PathBuf,
    news: PathBuf,
    shares: PathBuf,
    tweets: PathBuf,
    reference_date: &str,
) -> PyResult<PyCorpus> {
    let date = parse_date(reference_date)?;
    let (corpus, _) = load_corpus(&users, &news, &shares, &tweets, date).map_err(err_to_py)?;
    Ok(PyCorpus { inner: corpus })
}

/// Generate a synthetic corpus; `config_json` overrides the defaults.
#[pyfunction]
#[pyo3(signature = (out_dir, config_json = None))]
fn synth_corpus(py: Python<'_>, out_dir: PathBuf, config_json: Option<&str>) -> PyResult<Py<PyAny>> {
    let config: SynthConfig = match config_json {
        Some(text) => serde_json::from_str(text)
            .map_err(|e| PyValueError::new_err(format!("bad synth config: {e}")))?,
        None => SynthConfig::default(),
    };
    config.validate().map_err(err_to_py)?;
    let artifacts = synth::generate(&config, &out_dir).map_err(err_to_py)?;
    to_py(py, &artifacts)
}

/// Welch's unequal-variance t-test; returns {t, df, p_value}.
#[pyfunction]
fn welch(py: Python<'_>, xs: Vec<f64>, ys: Vec<f64>) -> PyResult<Py<PyAny>> {
    let result = welch_t_test(&xs, &ys).map_err(err_to_py)?;
    to_py(py, &result)
}

/// Five-number summary with linear-interpolation quartiles.
#[pyfunction]
fn quartiles(py: Python<'_>, xs: Vec<f64>) -> PyResult<Py<PyAny>> {
    let summary = quartile_summary(&xs).map_err(err_to_py)?;
    to_py(py, &summary)
}

/// Fit a PCA basis on `rows`; returns mean, components, and eigenvalues.
#[pyfunction]
fn pca(py: Python<'_>, rows: Vec<Vec<f64>>, dims: usize) -> PyResult<Py<PyAny>> {
    let model = fit_pca(&rows, dims).map_err(err_to_py)?;
    to_py(py, &model)
}

/// Repeated random holdout evaluation of one classifier.
#[pyfunction]
#[pyo3(signature = (x, y, algo = "rf", reps = 5, train_frac = 0.8, seed = 42, feature_names = None))]
#[allow(clippy::too_many_arguments)]
fn train_eval(
    py: Python<'_>,
    x: Vec<Vec<f64>>,
    y: Vec<u8>,
    algo: &str,
    reps: usize,
    train_frac: f64,
    seed: u64,
    feature_names: Option<Vec<String>>,
) -> PyResult<Py<PyAny>> {
    let algorithm = Algorithm::from_tag(algo).map_err(err_to_py)?;
    let width = x.first().map(Vec::len).unwrap_or(0);
    let names = feature_names.unwrap_or_else(|| (0..width).map(|i| format!("f{i:02}")).collect());
    let manifest = FeatureManifest::from_names(names);
    let dataset = Dataset::new(x, y, manifest).map_err(err_to_py)?;
    let report = repeated_holdout(
        &dataset,
        algorithm,
        &Hyperparameters::default(),
        train_frac,
        reps,
        seed,
    )
    .map_err(err_to_py)?;
    to_py(py, &report)
}

fn load_config(
    config_path: Option<&Path>,
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
) -> PyResult<PipelineConfig> {
    let mut config = match config_path {
        Some(path) => PipelineConfig::load(path).map_err(err_to_py)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = seed {
        config.seed = seed;
        config.synth.seed = seed;
    }
    if let Some(dir) = out_dir {
        config.out_dir = dir;
    }
    Ok(config)
}

/// Run every pipeline stage; returns the summary dict.
#[pyfunction]
#[pyo3(signature = (config_path = None, seed = None, out_dir = None))]
fn run_all(
    py: Python<'_>,
    config_path: Option<PathBuf>,
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
) -> PyResult<Py<PyAny>> {
    let config = load_config(config_path.as_deref(), seed, out_dir)?;
    let summary = pipeline::run_all(&config).map_err(err_to_py)?;
    to_py(py, &summary)
}

/// Vectorize group members and per-news profiles for a prepared out_dir.
#[pyfunction]
#[pyo3(signature = (config_path = None, seed = None, out_dir = None))]
fn extract_features(
    py: Python<'_>,
    config_path: Option<PathBuf>,
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
) -> PyResult<Py<PyAny>> {
    let config = load_config(config_path.as_deref(), seed, out_dir)?;
    let report = pipeline::run_extract(&config).map_err(err_to_py)?;
    to_py(py, &report)
}

/// The feature names the default configuration produces, in order.
#[pyfunction]
fn feature_names() -> Vec<String> {
    let config = PipelineConfig::default();
    FeatureManifest::for_config(&config.features.feature_config()).names
}

/// Algorithm tags accepted by train_eval.
#[pyfunction]
fn algorithms() -> Vec<&'static str> {
    Algorithm::ALL.iter().map(|a| a.tag()).collect()
}

#[pymodule]
fn upfkit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCorpus>()?;
    m.add_function(wrap_pyfunction!(load, m)?)?;
    m.add_function(wrap_pyfunction!(synth_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(welch, m)?)?;
    m.add_function(wrap_pyfunction!(quartiles, m)?)?;
    m.add_function(wrap_pyfunction!(pca, m)?)?;
    m.add_function(wrap_pyfunction!(train_eval, m)?)?;
    m.add_function(wrap_pyfunction!(run_all, m)?)?;
    m.add_function(wrap_pyfunction!(extract_features, m)?)?;
    m.add_function(wrap_pyfunction!(feature_names, m)?)?;
    m.add_function(wrap_pyfunction!(algorithms, m)?)?;
    Ok(())
}
