//! Uniform classifier contract: label encoding, dataset assembly, hyper-
//! parameter handling, fit/predict dispatch and model artifact persistence.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifiers::boosting::{fit_gbc, GbcParams, GradientBoostingModel};
use crate::classifiers::forest::{fit_rf, RandomForestModel, RfParams};
use crate::classifiers::knn::{fit_knn, KnnModel, KnnParams};
use crate::classifiers::mlp::{fit_mlp, MlpModel, MlpParams};
use crate::classifiers::nbc::{fit_nbc, MultinomialNbModel, NbcParams};
use crate::classifiers::sgd::{fit_sgd, SgdLinearModel, SgdParams};
use crate::classifiers::svm::{fit_svm_ovo, OvoSvmModel, SvmParams};
use crate::corpus::{StopWordList, Taxonomy};
use crate::error::{QcError, Result};
use crate::features::{FeatureConfig, SparseVector, Vocabulary};

pub const ARTIFACT_FORMAT_VERSION: u32 = 1;

/// The seven supported classifier kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Mlp,
    Svm,
    Nbc,
    Sgd,
    Gbc,
    Knn,
    Rf,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 7] = [
        ClassifierKind::Mlp,
        ClassifierKind::Svm,
        ClassifierKind::Nbc,
        ClassifierKind::Sgd,
        ClassifierKind::Gbc,
        ClassifierKind::Knn,
        ClassifierKind::Rf,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ClassifierKind::Mlp => "mlp",
            ClassifierKind::Svm => "svm",
            ClassifierKind::Nbc => "nbc",
            ClassifierKind::Sgd => "sgd",
            ClassifierKind::Gbc => "gbc",
            ClassifierKind::Knn => "knn",
            ClassifierKind::Rf => "rf",
        }
    }
}

impl std::fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "mlp" => Ok(ClassifierKind::Mlp),
            "svm" => Ok(ClassifierKind::Svm),
            "nbc" => Ok(ClassifierKind::Nbc),
            "sgd" => Ok(ClassifierKind::Sgd),
            "gbc" => Ok(ClassifierKind::Gbc),
            "knn" => Ok(ClassifierKind::Knn),
            "rf" => Ok(ClassifierKind::Rf),
            other => Err(format!("unknown classifier '{other}'")),
        }
    }
}

/// Which taxonomy layer the labels come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Coarse,
    Fine,
}

impl std::str::FromStr for Granularity {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "coarse" => Ok(Granularity::Coarse),
            "fine" => Ok(Granularity::Fine),
            other => Err(format!("unknown granularity '{other}'")),
        }
    }
}

/// Bijection between class names and dense 0-based ids, in taxonomy order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelEncoding {
    class_names: Vec<String>,
    #[serde(skip)]
    name_to_id: HashMap<String, usize>,
}

impl LabelEncoding {
    pub fn new(class_names: Vec<String>) -> Self {
        let name_to_id = class_names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        LabelEncoding {
            class_names,
            name_to_id,
        }
    }

    pub fn for_granularity(taxonomy: &Taxonomy, granularity: Granularity) -> Self {
        let names = match granularity {
            Granularity::Coarse => taxonomy.coarse_classes().to_vec(),
            Granularity::Fine => taxonomy.fine_classes().to_vec(),
        };
        LabelEncoding::new(names)
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn id_of(&self, name: &str) -> Option<usize> {
        self.name_to_id.get(name).copied()
    }

    pub fn name_of(&self, id: usize) -> &str {
        &self.class_names[id]
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn rebuild_index(&mut self) {
        self.name_to_id = self
            .class_names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
    }
}

/// Feature rows with parallel class ids.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub rows: Vec<SparseVector>,
    pub labels: Vec<usize>,
    pub n_features: usize,
    pub n_classes: usize,
}

impl Dataset {
    pub fn new(
        rows: Vec<SparseVector>,
        labels: Vec<usize>,
        n_features: usize,
        n_classes: usize,
    ) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(QcError::DimensionMismatch(format!(
                "{} rows vs {} labels",
                rows.len(),
                labels.len()
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if let Some(&max) = row.indices.last() {
                if max as usize >= n_features {
                    return Err(QcError::DimensionMismatch(format!(
                        "row {i} index {max} >= n_features {n_features}"
                    )));
                }
            }
        }
        for (i, &label) in labels.iter().enumerate() {
            if label >= n_classes {
                return Err(QcError::DimensionMismatch(format!(
                    "row {i} label {label} >= n_classes {n_classes}"
                )));
            }
        }
        Ok(Dataset {
            rows,
            labels,
            n_features,
            n_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Classifier-specific hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Hyperparams {
    Nbc(NbcParams),
    Sgd(SgdParams),
    Knn(KnnParams),
    Rf(RfParams),
    Gbc(GbcParams),
    Svm(SvmParams),
    Mlp(MlpParams),
}

impl Hyperparams {
    pub fn default_for(kind: ClassifierKind) -> Self {
        match kind {
            ClassifierKind::Nbc => Hyperparams::Nbc(NbcParams::default()),
            ClassifierKind::Sgd => Hyperparams::Sgd(SgdParams::default()),
            ClassifierKind::Knn => Hyperparams::Knn(KnnParams::default()),
            ClassifierKind::Rf => Hyperparams::Rf(RfParams::default()),
            ClassifierKind::Gbc => Hyperparams::Gbc(GbcParams::default()),
            ClassifierKind::Svm => Hyperparams::Svm(SvmParams::default()),
            ClassifierKind::Mlp => Hyperparams::Mlp(MlpParams::default()),
        }
    }

    /// Applies a `key=value` override; unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match self {
            Hyperparams::Nbc(p) => p.set(key, value),
            Hyperparams::Sgd(p) => p.set(key, value),
            Hyperparams::Knn(p) => p.set(key, value),
            Hyperparams::Rf(p) => p.set(key, value),
            Hyperparams::Gbc(p) => p.set(key, value),
            Hyperparams::Svm(p) => p.set(key, value),
            Hyperparams::Mlp(p) => p.set(key, value),
        }
    }

    pub fn kind(&self) -> ClassifierKind {
        match self {
            Hyperparams::Nbc(_) => ClassifierKind::Nbc,
            Hyperparams::Sgd(_) => ClassifierKind::Sgd,
            Hyperparams::Knn(_) => ClassifierKind::Knn,
            Hyperparams::Rf(_) => ClassifierKind::Rf,
            Hyperparams::Gbc(_) => ClassifierKind::Gbc,
            Hyperparams::Svm(_) => ClassifierKind::Svm,
            Hyperparams::Mlp(_) => ClassifierKind::Mlp,
        }
    }
}

pub(crate) fn parse_param<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| QcError::InvalidHyperparameter(format!("{key}={value}")))
}

/// Immutable fitted classifier state with a uniform predict contract.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "classifier", rename_all = "lowercase")]
pub enum TrainedModel {
    Nbc(MultinomialNbModel),
    Sgd(SgdLinearModel),
    Knn(KnnModel),
    Rf(RandomForestModel),
    Gbc(GradientBoostingModel),
    Svm(OvoSvmModel),
    Mlp(MlpModel),
}

impl TrainedModel {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            TrainedModel::Nbc(_) => ClassifierKind::Nbc,
            TrainedModel::Sgd(_) => ClassifierKind::Sgd,
            TrainedModel::Knn(_) => ClassifierKind::Knn,
            TrainedModel::Rf(_) => ClassifierKind::Rf,
            TrainedModel::Gbc(_) => ClassifierKind::Gbc,
            TrainedModel::Svm(_) => ClassifierKind::Svm,
            TrainedModel::Mlp(_) => ClassifierKind::Mlp,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            TrainedModel::Nbc(m) => m.n_features(),
            TrainedModel::Sgd(m) => m.n_features(),
            TrainedModel::Knn(m) => m.n_features(),
            TrainedModel::Rf(m) => m.n_features(),
            TrainedModel::Gbc(m) => m.n_features(),
            TrainedModel::Svm(m) => m.n_features(),
            TrainedModel::Mlp(m) => m.n_features(),
        }
    }

    /// Predicted class id for one row. Pure; safe to call concurrently.
    pub fn predict(&self, row: &SparseVector) -> Result<usize> {
        if let Some(&max) = row.indices.last() {
            if max as usize >= self.n_features() {
                return Err(QcError::DimensionMismatch(format!(
                    "row index {max} >= model n_features {}",
                    self.n_features()
                )));
            }
        }
        Ok(match self {
            TrainedModel::Nbc(m) => m.predict(row),
            TrainedModel::Sgd(m) => m.predict(row),
            TrainedModel::Knn(m) => m.predict(row),
            TrainedModel::Rf(m) => m.predict(row),
            TrainedModel::Gbc(m) => m.predict(row),
            TrainedModel::Svm(m) => m.predict(row),
            TrainedModel::Mlp(m) => m.predict(row),
        })
    }
}

/// Trains the classifier selected by `params` on `dataset`. Deterministic
/// given (dataset, params, seed).
pub fn fit(dataset: &Dataset, params: &Hyperparams, seed: u64) -> Result<TrainedModel> {
    if dataset.is_empty() {
        return Err(QcError::EmptyDataset);
    }
    Ok(match params {
        Hyperparams::Nbc(p) => TrainedModel::Nbc(fit_nbc(dataset, p)?),
        Hyperparams::Sgd(p) => TrainedModel::Sgd(fit_sgd(dataset, p, seed)?),
        Hyperparams::Knn(p) => TrainedModel::Knn(fit_knn(dataset, p)?),
        Hyperparams::Rf(p) => TrainedModel::Rf(fit_rf(dataset, p, seed)?),
        Hyperparams::Gbc(p) => TrainedModel::Gbc(fit_gbc(dataset, p, seed)?),
        Hyperparams::Svm(p) => TrainedModel::Svm(fit_svm_ovo(dataset, p, seed)?),
        Hyperparams::Mlp(p) => TrainedModel::Mlp(fit_mlp(dataset, p, seed)?),
    })
}

/// Everything needed to classify raw text: feature pipeline state plus the
/// fitted classifier.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineModel {
    pub feature_config: FeatureConfig,
    pub stopwords: Vec<String>,
    pub vocabulary: Vocabulary,
    pub label_encoding: LabelEncoding,
    pub granularity: Granularity,
    pub model: TrainedModel,
}

impl PipelineModel {
    pub fn predict_text(&self, text: &str) -> Result<&str> {
        let stops = StopWordList::from_words(self.stopwords.iter().cloned());
        let terms = crate::features::terms_of_text(text, &self.feature_config, &stops);
        let row = crate::features::vectorize_tfidf(&terms, &self.vocabulary);
        let id = self.model.predict(&row)?;
        Ok(self.label_encoding.name_of(id))
    }
}

/// Trains the full text pipeline: featurization state fit on `records`,
/// then the classifier fit on the resulting rows.
pub fn train_pipeline(
    records: &[crate::corpus::QuestionRecord],
    taxonomy: &Taxonomy,
    params: &Hyperparams,
    feature_config: &FeatureConfig,
    stops: &StopWordList,
    granularity: Granularity,
    seed: u64,
) -> Result<PipelineModel> {
    let encoding = LabelEncoding::for_granularity(taxonomy, granularity);
    let term_lists: Vec<Vec<String>> = records
        .iter()
        .map(|r| crate::features::terms_of_text(&r.text, feature_config, stops))
        .collect();
    let vocabulary = crate::features::build_vocabulary(&term_lists, feature_config)?;
    let rows = term_lists
        .iter()
        .map(|t| crate::features::vectorize_tfidf(t, &vocabulary))
        .collect();
    let labels = records
        .iter()
        .map(|r| {
            let name = match granularity {
                Granularity::Coarse => &r.coarse,
                Granularity::Fine => &r.fine,
            };
            encoding
                .id_of(name)
                .ok_or_else(|| QcError::Other(format!("label '{name}' not in taxonomy")))
        })
        .collect::<Result<Vec<usize>>>()?;
    let dataset = Dataset::new(rows, labels, vocabulary.len(), encoding.n_classes())?;
    let model = fit(&dataset, params, seed)?;
    Ok(PipelineModel {
        feature_config: feature_config.clone(),
        stopwords: stops.iter().map(|s| s.to_string()).collect(),
        vocabulary,
        label_encoding: encoding,
        granularity,
        model,
    })
}

#[derive(Serialize, Deserialize)]
struct ArtifactEnvelope {
    format_version: u32,
    classifier_kind: ClassifierKind,
    pipeline: PipelineModel,
}

/// Writes a versioned, self-describing model artifact.
pub fn save_model(pipeline: &PipelineModel, path: &Path) -> Result<()> {
    let envelope = ArtifactEnvelope {
        format_version: ARTIFACT_FORMAT_VERSION,
        classifier_kind: pipeline.model.kind(),
        pipeline: pipeline.clone(),
    };
    let body = serde_json::to_string(&envelope)
        .map_err(|e| QcError::Other(format!("serialize artifact: {e}")))?;
    fs::write(path, body).map_err(|e| QcError::io(path, e))
}

/// Loads a model artifact, checking version and kind/payload consistency.
pub fn load_model(path: &Path) -> Result<PipelineModel> {
    let body = fs::read_to_string(path).map_err(|e| QcError::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&body)
        .map_err(|e| QcError::CorruptArtifact(format!("not valid JSON: {e}")))?;
    let version = value
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| QcError::CorruptArtifact("missing format_version".into()))?;
    if version != ARTIFACT_FORMAT_VERSION as u64 {
        return Err(QcError::VersionMismatch {
            found: version as u32,
            expected: ARTIFACT_FORMAT_VERSION,
        });
    }
    let envelope: ArtifactEnvelope = serde_json::from_value(value)
        .map_err(|e| QcError::CorruptArtifact(e.to_string()))?;
    let mut pipeline = envelope.pipeline;
    if envelope.classifier_kind != pipeline.model.kind() {
        return Err(QcError::CorruptArtifact(format!(
            "declared kind {} does not match payload {}",
            envelope.classifier_kind,
            pipeline.model.kind()
        )));
    }
    pipeline.vocabulary.rebuild_index();
    pipeline.label_encoding.rebuild_index();
    Ok(pipeline)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::SparseVector;

    fn toy_dataset() -> Dataset {
        let rows = vec![
            SparseVector::from_pairs(vec![(0, 1.0)]),
            SparseVector::from_pairs(vec![(1, 1.0)]),
        ];
        Dataset::new(rows, vec![0, 1], 2, 2).unwrap()
    }

    #[test]
    fn fit_dispatches_to_nbc() {
        let params = Hyperparams::default_for(ClassifierKind::Nbc);
        let model = fit(&toy_dataset(), &params, 0).unwrap();
        assert_eq!(model.kind(), ClassifierKind::Nbc);
    }

    #[test]
    fn fit_rejects_empty_dataset() {
        let ds = Dataset::new(vec![], vec![], 2, 2).unwrap();
        let params = Hyperparams::default_for(ClassifierKind::Nbc);
        assert!(matches!(fit(&ds, &params, 0), Err(QcError::EmptyDataset)));
    }

    #[test]
    fn fit_deterministic() {
        let ds = toy_dataset();
        for kind in [ClassifierKind::Sgd, ClassifierKind::Nbc] {
            let params = Hyperparams::default_for(kind);
            let a = fit(&ds, &params, 7).unwrap();
            let b = fit(&ds, &params, 7).unwrap();
            let probe = SparseVector::from_pairs(vec![(0, 0.4), (1, 0.2)]);
            assert_eq!(a.predict(&probe).unwrap(), b.predict(&probe).unwrap());
        }
    }

    #[test]
    fn predict_rejects_out_of_range_index() {
        let params = Hyperparams::default_for(ClassifierKind::Nbc);
        let model = fit(&toy_dataset(), &params, 0).unwrap();
        let bad = SparseVector::from_pairs(vec![(5, 1.0)]);
        assert!(matches!(
            model.predict(&bad),
            Err(QcError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn single_class_training_predicts_that_class() {
        let rows = vec![
            SparseVector::from_pairs(vec![(0, 1.0)]),
            SparseVector::from_pairs(vec![(1, 1.0)]),
        ];
        let ds = Dataset::new(rows, vec![1, 1], 2, 2).unwrap();
        for kind in [
            ClassifierKind::Nbc,
            ClassifierKind::Knn,
            ClassifierKind::Rf,
        ] {
            let mut params = Hyperparams::default_for(kind);
            if kind == ClassifierKind::Knn {
                params.set("k", "2").unwrap();
            }
            if kind == ClassifierKind::Rf {
                params.set("n_trees", "5").unwrap();
            }
            let model = fit(&ds, &params, 3).unwrap();
            let probe = SparseVector::from_pairs(vec![(0, 0.3)]);
            assert_eq!(model.predict(&probe).unwrap(), 1, "kind {kind}");
        }
    }

    #[test]
    fn unknown_hyperparameter_rejected() {
        let mut params = Hyperparams::default_for(ClassifierKind::Nbc);
        assert!(params.set("bogus", "1").is_err());
        assert!(params.set("alpha", "0.5").is_ok());
    }

    #[test]
    fn dataset_validation() {
        let rows = vec![SparseVector::from_pairs(vec![(9, 1.0)])];
        assert!(Dataset::new(rows, vec![0], 2, 2).is_err());
        let rows = vec![SparseVector::from_pairs(vec![(0, 1.0)])];
        assert!(Dataset::new(rows, vec![5], 2, 2).is_err());
    }
}
