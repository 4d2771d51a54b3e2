//! Gradient boosting with multinomial deviance: per stage, one depth-3
//! regression tree per class is fit to softmax residuals and applied with a
//! Newton leaf-value step.

use serde::{Deserialize, Serialize};

use crate::classifiers::nbc::argmax_first;
use crate::classifiers::tree::{
    build_tree, ColumnIndex, DecisionTree, Node, TreeConfig, TreeTarget,
};
use crate::error::{QcError, Result};
use crate::features::SparseVector;
use crate::model::{parse_param, Dataset};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GbcParams {
    pub n_stages: usize,
    pub learning_rate: f64,
    pub tree_depth: usize,
}

impl Default for GbcParams {
    fn default() -> Self {
        GbcParams {
            n_stages: 100,
            learning_rate: 0.1,
            tree_depth: 3,
        }
    }
}

impl GbcParams {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "n_stages" => self.n_stages = parse_param(key, value)?,
            "learning_rate" => self.learning_rate = parse_param(key, value)?,
            "tree_depth" => self.tree_depth = parse_param(key, value)?,
            _ => {
                return Err(QcError::InvalidHyperparameter(format!(
                    "gbc has no hyperparameter '{key}'"
                )))
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GradientBoostingModel {
    /// `stages[s][c]` is the stage-s regression tree for class c.
    pub stages: Vec<Vec<DecisionTree>>,
    pub learning_rate: f64,
    pub initial_scores: Vec<f64>,
    /// Training deviance after each stage, recorded during fit.
    pub train_deviance: Vec<f64>,
    n_features: usize,
}

impl GradientBoostingModel {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn raw_scores(&self, row: &SparseVector) -> Vec<f64> {
        let mut scores = self.initial_scores.clone();
        for stage in &self.stages {
            for (c, tree) in stage.iter().enumerate() {
                scores[c] += self.learning_rate * tree.predict_value(row);
            }
        }
        scores
    }

    pub fn predict(&self, row: &SparseVector) -> usize {
        argmax_first(&self.raw_scores(row))
    }
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

/// Mean multinomial deviance (softmax cross-entropy) of raw scores.
fn deviance(scores: &[Vec<f64>], labels: &[usize]) -> f64 {
    let mut total = 0.0;
    for (row_scores, &label) in scores.iter().zip(labels) {
        let probs = softmax(row_scores);
        total -= probs[label].max(1e-300).ln();
    }
    total / labels.len() as f64
}

/// Replaces each leaf's mean value with the Newton step
/// sum(r) / sum(|r| (1 - |r|)), guarded against zero denominators.
fn newton_leaf_values(tree: &mut DecisionTree, rows: &[SparseVector], residuals: &[f64]) {
    let mut num = vec![0.0f64; tree.nodes.len()];
    let mut den = vec![0.0f64; tree.nodes.len()];
    for (row, &r) in rows.iter().zip(residuals) {
        let leaf = tree.leaf_of(row);
        num[leaf] += r;
        den[leaf] += r.abs() * (1.0 - r.abs());
    }
    for (i, node) in tree.nodes.iter_mut().enumerate() {
        if let Node::ValueLeaf { value } = node {
            *value = if den[i].abs() < 1e-12 {
                0.0
            } else {
                num[i] / den[i]
            };
        }
    }
}

pub fn fit_gbc(dataset: &Dataset, params: &GbcParams, _seed: u64) -> Result<GradientBoostingModel> {
    if dataset.n_classes < 2 {
        return Err(QcError::TooFewClasses {
            need: 2,
            got: dataset.n_classes,
        });
    }
    let n = dataset.len();
    let n_classes = dataset.n_classes;
    // initial raw scores: log class priors (log(0) floor for absent classes)
    let mut class_counts = vec![0usize; n_classes];
    for &label in &dataset.labels {
        class_counts[label] += 1;
    }
    let initial_scores: Vec<f64> = class_counts
        .iter()
        .map(|&c| ((c as f64 + 1e-12) / n as f64).ln())
        .collect();
    let columns = ColumnIndex::build(&dataset.rows, dataset.n_features);
    let config = TreeConfig {
        max_depth: Some(params.tree_depth),
        min_samples_split: 2,
        features_per_split: None,
    };
    let samples: Vec<usize> = (0..n).collect();
    let mut scores: Vec<Vec<f64>> = vec![initial_scores.clone(); n];
    let mut stages = Vec::with_capacity(params.n_stages);
    let mut train_deviance = Vec::with_capacity(params.n_stages);
    let mut residuals = vec![0.0f64; n];
    for _ in 0..params.n_stages {
        let probs: Vec<Vec<f64>> = scores.iter().map(|s| softmax(s)).collect();
        let mut stage = Vec::with_capacity(n_classes);
        for c in 0..n_classes {
            for i in 0..n {
                let y = if dataset.labels[i] == c { 1.0 } else { 0.0 };
                residuals[i] = y - probs[i][c];
            }
            let target = TreeTarget::Regression {
                targets: &residuals,
            };
            let mut tree = build_tree(&dataset.rows, &columns, &target, &samples, &config, None);
            newton_leaf_values(&mut tree, &dataset.rows, &residuals);
            for (i, row) in dataset.rows.iter().enumerate() {
                scores[i][c] += params.learning_rate * tree.predict_value(row);
            }
            stage.push(tree);
        }
        stages.push(stage);
        train_deviance.push(deviance(&scores, &dataset.labels));
    }
    Ok(GradientBoostingModel {
        stages,
        learning_rate: params.learning_rate,
        initial_scores,
        train_deviance,
        n_features: dataset.n_features,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable_1d() -> Dataset {
        let rows: Vec<SparseVector> = (0..10)
            .map(|i| SparseVector::from_pairs(vec![(0, i as f64)]))
            .collect();
        let labels = (0..10).map(|i| usize::from(i >= 5)).collect();
        Dataset::new(rows, labels, 1, 2).unwrap()
    }

    #[test]
    fn zero_learning_rate_predicts_prior_plurality() {
        let mut ds = separable_1d();
        ds.labels = vec![1, 1, 1, 1, 1, 1, 0, 0, 0, 0];
        let params = GbcParams {
            learning_rate: 0.0,
            n_stages: 5,
            ..GbcParams::default()
        };
        let model = fit_gbc(&ds, &params, 0).unwrap();
        for row in &ds.rows {
            assert_eq!(model.predict(row), 1);
        }
    }

    #[test]
    fn separable_toy_reaches_full_accuracy() {
        let ds = separable_1d();
        let model = fit_gbc(&ds, &GbcParams::default(), 0).unwrap();
        for (row, &label) in ds.rows.iter().zip(&ds.labels) {
            assert_eq!(model.predict(row), label);
        }
    }

    #[test]
    fn deviance_non_increasing() {
        let ds = separable_1d();
        let model = fit_gbc(&ds, &GbcParams::default(), 0).unwrap();
        assert_eq!(model.train_deviance.len(), 100);
        for w in model.train_deviance.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "deviance rose: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn rejects_single_class() {
        let rows = vec![SparseVector::from_pairs(vec![(0, 1.0)])];
        let ds = Dataset::new(rows, vec![0], 1, 1).unwrap();
        assert!(matches!(
            fit_gbc(&ds, &GbcParams::default(), 0),
            Err(QcError::TooFewClasses { .. })
        ));
    }

    #[test]
    fn exactly_n_stages() {
        let ds = separable_1d();
        let params = GbcParams {
            n_stages: 7,
            ..GbcParams::default()
        };
        let model = fit_gbc(&ds, &params, 0).unwrap();
        assert_eq!(model.stages.len(), 7);
        assert_eq!(model.stages[0].len(), 2);
    }
}
