//! Random forest: bootstrap-sampled entropy trees with per-split feature
//! subsampling, aggregated by majority vote.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifiers::tree::{
    build_tree, ColumnIndex, DecisionTree, TreeConfig, TreeTarget,
};
use crate::error::{QcError, Result};
use crate::features::SparseVector;
use crate::model::{parse_param, Dataset};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RfParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for RfParams {
    fn default() -> Self {
        RfParams {
            n_trees: 500,
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

impl RfParams {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "n_trees" => self.n_trees = parse_param(key, value)?,
            "max_depth" => self.max_depth = Some(parse_param(key, value)?),
            "min_samples_split" => self.min_samples_split = parse_param(key, value)?,
            _ => {
                return Err(QcError::InvalidHyperparameter(format!(
                    "rf has no hyperparameter '{key}'"
                )))
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RandomForestModel {
    pub trees: Vec<DecisionTree>,
    pub features_per_split: usize,
    pub seed: u64,
    n_features: usize,
    n_classes: usize,
}

impl RandomForestModel {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Plurality over tree votes, smallest class id on ties.
    pub fn predict(&self, row: &SparseVector) -> usize {
        let mut votes = vec![0usize; self.n_classes];
        for tree in &self.trees {
            votes[tree.predict_class(row)] += 1;
        }
        let mut best = 0;
        for (i, &v) in votes.iter().enumerate().skip(1) {
            if v > votes[best] {
                best = i;
            }
        }
        best
    }
}

fn tree_rng(seed: u64, tree_id: u64) -> ChaCha8Rng {
    // independent stream per tree
    ChaCha8Rng::seed_from_u64(seed ^ tree_id.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Each tree draws an n-sample bootstrap and a fresh feature-subset stream,
/// both determined by (seed, tree index).
pub fn fit_rf(dataset: &Dataset, params: &RfParams, seed: u64) -> Result<RandomForestModel> {
    if params.n_trees == 0 {
        return Err(QcError::InvalidHyperparameter("n_trees must be >= 1".into()));
    }
    let n = dataset.len();
    let features_per_split = ((dataset.n_features as f64).sqrt().floor() as usize).max(1);
    let columns = ColumnIndex::build(&dataset.rows, dataset.n_features);
    let target = TreeTarget::Classes {
        labels: &dataset.labels,
        n_classes: dataset.n_classes,
    };
    let config = TreeConfig {
        max_depth: params.max_depth,
        min_samples_split: params.min_samples_split,
        features_per_split: Some(features_per_split),
    };
    let mut trees = Vec::with_capacity(params.n_trees);
    for tree_id in 0..params.n_trees {
        let mut rng = tree_rng(seed, tree_id as u64);
        let samples: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        trees.push(build_tree(
            &dataset.rows,
            &columns,
            &target,
            &samples,
            &config,
            Some(&mut rng),
        ));
    }
    Ok(RandomForestModel {
        trees,
        features_per_split,
        seed,
        n_features: dataset.n_features,
        n_classes: dataset.n_classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob_dataset() -> Dataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..20 {
            let x = i as f64 * 0.1;
            rows.push(SparseVector::from_pairs(vec![(0, x), (1, 1.0 - x)]));
            labels.push(0);
            rows.push(SparseVector::from_pairs(vec![(0, 5.0 + x), (1, 4.0 - x)]));
            labels.push(1);
        }
        Dataset::new(rows, labels, 2, 2).unwrap()
    }

    #[test]
    fn single_class_always_that_class() {
        let rows = vec![
            SparseVector::from_pairs(vec![(0, 1.0)]),
            SparseVector::from_pairs(vec![(0, 2.0)]),
        ];
        let ds = Dataset::new(rows, vec![1, 1], 2, 2).unwrap();
        let params = RfParams {
            n_trees: 7,
            ..RfParams::default()
        };
        let model = fit_rf(&ds, &params, 0).unwrap();
        assert_eq!(model.predict(&SparseVector::from_pairs(vec![(0, 9.0)])), 1);
    }

    #[test]
    fn same_seed_vote_identical() {
        let ds = blob_dataset();
        let params = RfParams {
            n_trees: 15,
            ..RfParams::default()
        };
        let a = fit_rf(&ds, &params, 11).unwrap();
        let b = fit_rf(&ds, &params, 11).unwrap();
        for row in &ds.rows {
            assert_eq!(a.predict(row), b.predict(row));
        }
        assert_eq!(a.trees, b.trees);
    }

    #[test]
    fn exactly_n_trees() {
        let ds = blob_dataset();
        let params = RfParams {
            n_trees: 9,
            ..RfParams::default()
        };
        let model = fit_rf(&ds, &params, 2).unwrap();
        assert_eq!(model.trees.len(), 9);
    }

    #[test]
    fn majority_vote() {
        let ds = blob_dataset();
        let params = RfParams {
            n_trees: 3,
            ..RfParams::default()
        };
        let model = fit_rf(&ds, &params, 4).unwrap();
        // separable blobs: the vote should recover training labels
        let mut correct = 0;
        for (row, &label) in ds.rows.iter().zip(&ds.labels) {
            if model.predict(row) == label {
                correct += 1;
            }
        }
        assert!(correct >= 38, "correct = {correct}");
    }
}
