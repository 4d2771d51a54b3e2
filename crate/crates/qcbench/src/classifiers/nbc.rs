//! Multinomial Naive Bayes with additive smoothing. TF-IDF weights are
//! accepted as fractional counts; the multinomial formulas are well-defined
//! for nonnegative reals.

use serde::{Deserialize, Serialize};

use crate::error::{QcError, Result};
use crate::features::SparseVector;
use crate::model::{parse_param, Dataset};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NbcParams {
    pub alpha: f64,
}

impl Default for NbcParams {
    fn default() -> Self {
        NbcParams { alpha: 0.1 }
    }
}

impl NbcParams {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "alpha" => self.alpha = parse_param(key, value)?,
            _ => {
                return Err(QcError::InvalidHyperparameter(format!(
                    "nbc has no hyperparameter '{key}'"
                )))
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultinomialNbModel {
    pub alpha: f64,
    /// log P(c); classes absent from training get -inf.
    pub class_log_prior: Vec<f64>,
    /// Per class, per feature log theta(c, t).
    pub feature_log_prob: Vec<Vec<f64>>,
    n_features: usize,
}

impl MultinomialNbModel {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.class_log_prior.len()
    }

    /// Joint log posterior (up to the evidence constant) for every class.
    pub fn log_posterior(&self, row: &SparseVector) -> Vec<f64> {
        (0..self.n_classes())
            .map(|c| {
                let mut score = self.class_log_prior[c];
                for (idx, value) in row.iter() {
                    score += value * self.feature_log_prob[c][idx as usize];
                }
                score
            })
            .collect()
    }

    /// argmax of the log posterior; ties go to the smallest class id.
    pub fn predict(&self, row: &SparseVector) -> usize {
        argmax_first(&self.log_posterior(row))
    }
}

/// argmax with smallest-index tie breaking; -inf everywhere yields 0.
pub(crate) fn argmax_first(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// theta(c,t) = (count(c,t) + alpha) / (count(c,.) + alpha * V), priors from
/// class frequencies, all in log space.
pub fn fit_nbc(dataset: &Dataset, params: &NbcParams) -> Result<MultinomialNbModel> {
    if params.alpha <= 0.0 {
        return Err(QcError::InvalidHyperparameter(format!(
            "alpha must be positive, got {}",
            params.alpha
        )));
    }
    let n_classes = dataset.n_classes;
    let n_features = dataset.n_features;
    let mut class_counts = vec![0usize; n_classes];
    let mut feature_counts = vec![vec![0.0f64; n_features]; n_classes];
    for (row_id, (row, &label)) in dataset.rows.iter().zip(&dataset.labels).enumerate() {
        class_counts[label] += 1;
        for (idx, value) in row.iter() {
            if value < 0.0 {
                return Err(QcError::NegativeFeature { row: row_id, value });
            }
            feature_counts[label][idx as usize] += value;
        }
    }
    let n = dataset.len() as f64;
    let class_log_prior = class_counts
        .iter()
        .map(|&c| {
            if c == 0 {
                f64::NEG_INFINITY
            } else {
                (c as f64 / n).ln()
            }
        })
        .collect();
    let feature_log_prob = feature_counts
        .iter()
        .map(|counts| {
            let total: f64 = counts.iter().sum();
            let denom = total + params.alpha * n_features as f64;
            counts
                .iter()
                .map(|&c| ((c + params.alpha) / denom).ln())
                .collect()
        })
        .collect();
    Ok(MultinomialNbModel {
        alpha: params.alpha,
        class_log_prior,
        feature_log_prob,
        n_features,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_class_toy() -> Dataset {
        // class A doc [2,0], class B doc [0,2]
        let rows = vec![
            SparseVector::from_pairs(vec![(0, 2.0)]),
            SparseVector::from_pairs(vec![(1, 2.0)]),
        ];
        Dataset::new(rows, vec![0, 1], 2, 2).unwrap()
    }

    #[test]
    fn hand_computed_theta() {
        let model = fit_nbc(&two_class_toy(), &NbcParams::default()).unwrap();
        // theta(A, t0) = (2 + 0.1) / (2 + 0.1*2) = 2.1/2.2
        let expected = (2.1f64 / 2.2).ln();
        assert!((model.feature_log_prob[0][0] - expected).abs() < 1e-12);
        assert!((2.1f64 / 2.2 - 0.954_545f64).abs() < 1e-6);
    }

    #[test]
    fn symmetric_priors() {
        let model = fit_nbc(&two_class_toy(), &NbcParams::default()).unwrap();
        assert!((model.class_log_prior[0] - 0.5f64.ln()).abs() < 1e-12);
        assert!((model.class_log_prior[1] - 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn smoothing_keeps_absent_features_positive() {
        let model = fit_nbc(&two_class_toy(), &NbcParams::default()).unwrap();
        for probs in &model.feature_log_prob {
            for &lp in probs {
                assert!(lp.is_finite());
                assert!(lp.exp() > 0.0);
            }
        }
    }

    #[test]
    fn per_class_theta_sums_to_one() {
        let model = fit_nbc(&two_class_toy(), &NbcParams::default()).unwrap();
        for probs in &model.feature_log_prob {
            let sum: f64 = probs.iter().map(|lp| lp.exp()).sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn predicts_dominant_feature_class() {
        let model = fit_nbc(&two_class_toy(), &NbcParams::default()).unwrap();
        let row = SparseVector::from_pairs(vec![(0, 1.0)]);
        assert_eq!(model.predict(&row), 0);
        let row = SparseVector::from_pairs(vec![(1, 1.0)]);
        assert_eq!(model.predict(&row), 1);
    }

    #[test]
    fn empty_row_falls_back_to_priors() {
        let rows = vec![
            SparseVector::from_pairs(vec![(0, 1.0)]),
            SparseVector::from_pairs(vec![(0, 1.0)]),
            SparseVector::from_pairs(vec![(1, 1.0)]),
        ];
        let ds = Dataset::new(rows, vec![1, 1, 0], 2, 2).unwrap();
        let model = fit_nbc(&ds, &NbcParams::default()).unwrap();
        assert_eq!(model.predict(&SparseVector::empty()), 1);
    }

    #[test]
    fn exact_tie_takes_class_zero() {
        let model = fit_nbc(&two_class_toy(), &NbcParams::default()).unwrap();
        assert_eq!(model.predict(&SparseVector::empty()), 0);
    }

    #[test]
    fn rejects_negative_feature() {
        let rows = vec![SparseVector::from_pairs(vec![(0, -1.0)])];
        let ds = Dataset::new(rows, vec![0], 2, 2).unwrap();
        assert!(matches!(
            fit_nbc(&ds, &NbcParams::default()),
            Err(QcError::NegativeFeature { .. })
        ));
    }

    #[test]
    fn monotonicity_in_discriminative_feature() {
        let model = fit_nbc(&two_class_toy(), &NbcParams::default()).unwrap();
        // theta(A, t0) > theta(B, t0): growing t0 must never flip A -> B
        assert!(model.feature_log_prob[0][0] > model.feature_log_prob[1][0]);
        let mut last_was_a = false;
        for scale in [0.1, 0.5, 1.0, 2.0, 8.0] {
            let row = SparseVector::from_pairs(vec![(0, scale), (1, 0.5)]);
            let pred = model.predict(&row);
            if last_was_a {
                assert_eq!(pred, 0);
            }
            last_was_a = pred == 0;
        }
    }
}
