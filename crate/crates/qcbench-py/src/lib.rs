//! Python bindings: corpus generation, pipeline training, prediction,
//! cross-validation and complexity benchmarking from Python.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;

use qcbench::bench::{run_bench, BenchSpec};
use qcbench::corpus::{
    generate_synthetic_corpus, QuestionRecord, StopWordList, Taxonomy, FILLER_TOKENS,
};
use qcbench::error::QcError;
use qcbench::eval::{run_crossval, CrossvalSpec};
use qcbench::features::FeatureConfig;
use qcbench::model::{
    load_model, save_model, train_pipeline, ClassifierKind, Granularity, Hyperparams,
    PipelineModel,
};

fn qc_err(e: QcError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_err(what: &str, detail: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(format!("{what}: {detail}"))
}

fn json_to_py(py: Python<'_>, value: &serde_json::Value) -> PyResult<Py<PyAny>> {
    match value {
        serde_json::Value::Null => py.None().into_py_any(py),
        serde_json::Value::Bool(b) => b.into_py_any(py),
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_py_any(py)
            } else {
                n.as_f64().unwrap_or(f64::NAN).into_py_any(py)
            }
        }
        serde_json::Value::String(s) => s.into_py_any(py),
        serde_json::Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_py_any(py)
        }
        serde_json::Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, v) in map {
                dict.set_item(k, json_to_py(py, v)?)?;
            }
            dict.into_py_any(py)
        }
    }
}

fn to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let json = serde_json::to_value(value).map_err(|e| parse_err("serialize", e))?;
    json_to_py(py, &json)
}

fn records_from_py(records: &Bound<'_, PyAny>) -> PyResult<Vec<QuestionRecord>> {
    let mut out = Vec::new();
    for (i, item) in records.try_iter()?.enumerate() {
        let item = item?;
        let dict = item
            .cast::<PyDict>()
            .map_err(|_| parse_err("records", format!("item {i} is not a dict")))?;
        let field = |key: &str| -> PyResult<String> {
            dict.get_item(key)?
                .ok_or_else(|| parse_err("records", format!("item {i} missing '{key}'")))?
                .extract::<String>()
        };
        out.push(QuestionRecord {
            id: field("id")?,
            text: field("text")?,
            coarse: field("coarse")?,
            fine: field("fine")?,
        });
    }
    Ok(out)
}

fn parse_setup(
    classifier: &str,
    granularity: &str,
    stopword_mode: &str,
    overrides: Option<&Bound<'_, PyDict>>,
) -> PyResult<(Hyperparams, Granularity, FeatureConfig)> {
    let kind: ClassifierKind = classifier
        .parse()
        .map_err(|e| parse_err("classifier", e))?;
    let granularity: Granularity = granularity
        .parse()
        .map_err(|e| parse_err("granularity", e))?;
    let mut params = Hyperparams::default_for(kind);
    if let Some(overrides) = overrides {
        for (key, value) in overrides.iter() {
            let key: String = key.extract()?;
            let value = value.str()?.to_string();
            params.set(&key, &value).map_err(qc_err)?;
        }
    }
    let feature_config = FeatureConfig {
        stopword_mode: stopword_mode
            .parse()
            .map_err(|e| parse_err("stopword_mode", e))?,
        ..FeatureConfig::default()
    };
    Ok((params, granularity, feature_config))
}

fn default_stops() -> StopWordList {
    StopWordList::from_words(FILLER_TOKENS.iter().map(|s| s.to_string()))
}

/// The Li-Roth-style taxonomy as {coarse: [fine, ...]}.
#[pyfunction]
fn taxonomy(py: Python<'_>) -> PyResult<Py<PyAny>> {
    let tax = Taxonomy::standard();
    let dict = PyDict::new(py);
    for coarse in tax.coarse_classes() {
        let fines: Vec<&String> = tax
            .fine_classes()
            .iter()
            .filter(|f| tax.coarse_of(f) == Some(coarse.as_str()))
            .collect();
        dict.set_item(coarse, fines)?;
    }
    dict.into_py_any(py)
}

/// Deterministic synthetic corpus as a list of record dicts.
#[pyfunction]
#[pyo3(signature = (seed=42, scale=1.0))]
fn generate_corpus(py: Python<'_>, seed: u64, scale: f64) -> PyResult<Py<PyAny>> {
    if scale.is_nan() || scale <= 0.0 {
        return Err(parse_err("scale", "must be positive"));
    }
    let tax = Taxonomy::standard();
    let records = generate_synthetic_corpus(&tax, seed, scale);
    to_py(py, &records)
}

/// The built-in stop-word list.
#[pyfunction]
fn stopwords() -> Vec<String> {
    FILLER_TOKENS.iter().map(|s| s.to_string()).collect()
}

/// A trained text-classification pipeline.
#[pyclass]
struct Model {
    inner: PipelineModel,
}

#[pymethods]
impl Model {
    /// Predicted class name for one question.
    fn predict(&self, text: &str) -> PyResult<String> {
        self.inner
            .predict_text(text)
            .map(|s| s.to_string())
            .map_err(qc_err)
    }

    fn predict_batch(&self, texts: Vec<String>) -> PyResult<Vec<String>> {
        texts.iter().map(|t| self.predict(t)).collect()
    }

    fn save(&self, path: &str) -> PyResult<()> {
        save_model(&self.inner, std::path::Path::new(path)).map_err(qc_err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Model> {
        load_model(std::path::Path::new(path))
            .map(|inner| Model { inner })
            .map_err(qc_err)
    }

    #[getter]
    fn classifier(&self) -> String {
        self.inner.model.kind().to_string()
    }

    #[getter]
    fn classes(&self) -> Vec<String> {
        self.inner.label_encoding.class_names().to_vec()
    }

    #[getter]
    fn n_features(&self) -> usize {
        self.inner.model.n_features()
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(classifier='{}', classes={}, n_features={})",
            self.inner.model.kind(),
            self.inner.label_encoding.n_classes(),
            self.inner.model.n_features()
        )
    }
}

/// Trains a pipeline on labeled records.
#[pyfunction]
#[pyo3(signature = (records, classifier, granularity="coarse", stopword_mode="keep", seed=42, overrides=None))]
fn train(
    records: &Bound<'_, PyAny>,
    classifier: &str,
    granularity: &str,
    stopword_mode: &str,
    seed: u64,
    overrides: Option<&Bound<'_, PyDict>>,
) -> PyResult<Model> {
    let records = records_from_py(records)?;
    let (params, granularity, feature_config) =
        parse_setup(classifier, granularity, stopword_mode, overrides)?;
    let tax = Taxonomy::standard();
    let stops = default_stops();
    train_pipeline(
        &records,
        &tax,
        &params,
        &feature_config,
        &stops,
        granularity,
        seed,
    )
    .map(|inner| Model { inner })
    .map_err(qc_err)
}

/// Stratified k-fold cross-validation; returns the report as a dict.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (records, classifier, folds=10, granularity="coarse", stopword_mode="keep", seed=42, overrides=None))]
fn crossval(
    py: Python<'_>,
    records: &Bound<'_, PyAny>,
    classifier: &str,
    folds: usize,
    granularity: &str,
    stopword_mode: &str,
    seed: u64,
    overrides: Option<&Bound<'_, PyDict>>,
) -> PyResult<Py<PyAny>> {
    let records = records_from_py(records)?;
    let (params, granularity, feature_config) =
        parse_setup(classifier, granularity, stopword_mode, overrides)?;
    let tax = Taxonomy::standard();
    let stops = default_stops();
    let report = run_crossval(&CrossvalSpec {
        records: &records,
        taxonomy: &tax,
        params,
        feature_config,
        stops: &stops,
        granularity,
        k: folds,
        seed,
    })
    .map_err(qc_err)?;
    to_py(py, &report)
}

/// Times one classifier phase across a size axis; returns the report
/// (measurements plus slope verdict) as a dict.
#[pyfunction]
#[pyo3(name = "bench", signature = (classifier, phase, axis, sizes, repeats=3, seed=42))]
fn bench_scaling(
    py: Python<'_>,
    classifier: &str,
    phase: &str,
    axis: &str,
    sizes: Vec<usize>,
    repeats: usize,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let spec = BenchSpec::new(
        classifier.parse().map_err(|e| parse_err("classifier", e))?,
        phase.parse().map_err(|e| parse_err("phase", e))?,
        axis.parse().map_err(|e| parse_err("axis", e))?,
        sizes,
        repeats,
        seed,
    );
    let report = run_bench(&spec).map_err(qc_err)?;
    to_py(py, &report)
}

#[pymodule]
fn qcbench_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(taxonomy, m)?)?;
    m.add_function(wrap_pyfunction!(generate_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(stopwords, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(crossval, m)?)?;
    m.add_function(wrap_pyfunction!(bench_scaling, m)?)?;
    m.add_class::<Model>()?;
    Ok(())
}
