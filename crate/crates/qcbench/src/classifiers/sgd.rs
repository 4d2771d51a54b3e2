//! Linear classifier trained by stochastic gradient descent on the
//! L2-regularized hinge loss, one-vs-rest over classes.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifiers::nbc::argmax_first;
use crate::error::{QcError, Result};
use crate::features::SparseVector;
use crate::model::{parse_param, Dataset};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SgdParams {
    pub eta0: f64,
    pub l2_lambda: f64,
    pub epochs: usize,
}

impl Default for SgdParams {
    fn default() -> Self {
        SgdParams {
            eta0: 0.1,
            l2_lambda: 1e-4,
            epochs: 20,
        }
    }
}

impl SgdParams {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "eta0" => self.eta0 = parse_param(key, value)?,
            "l2_lambda" => self.l2_lambda = parse_param(key, value)?,
            "epochs" => self.epochs = parse_param(key, value)?,
            _ => {
                return Err(QcError::InvalidHyperparameter(format!(
                    "sgd has no hyperparameter '{key}'"
                )))
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SgdLinearModel {
    /// One weight row per class (one-vs-rest).
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub config: SgdParams,
}

impl SgdLinearModel {
    pub fn n_features(&self) -> usize {
        self.weights.first().map_or(0, |w| w.len())
    }

    pub fn decision_values(&self, row: &SparseVector) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| {
                let mut score = *b;
                for (idx, value) in row.iter() {
                    score += w[idx as usize] * value;
                }
                score
            })
            .collect()
    }

    /// argmax of w_c . x + b_c, smallest class id on ties.
    pub fn predict(&self, row: &SparseVector) -> usize {
        argmax_first(&self.decision_values(row))
    }
}

/// Per global step t (0-based), eta_t = eta0 / (1 + eta0 * lambda * t).
/// Each epoch visits the rows in a freshly seeded-shuffled order; every
/// visited sample updates all class machines at once, which is equivalent to
/// per-class passes over the same shuffle. The bias is not regularized.
pub fn fit_sgd(dataset: &Dataset, params: &SgdParams, seed: u64) -> Result<SgdLinearModel> {
    if dataset.n_classes < 2 {
        return Err(QcError::TooFewClasses {
            need: 2,
            got: dataset.n_classes,
        });
    }
    let n_classes = dataset.n_classes;
    let mut weights = vec![vec![0.0f64; dataset.n_features]; n_classes];
    let mut bias = vec![0.0f64; n_classes];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut step = 0u64;
    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let eta = params.eta0 / (1.0 + params.eta0 * params.l2_lambda * step as f64);
            let row = &dataset.rows[i];
            let label = dataset.labels[i];
            for c in 0..n_classes {
                let y = if label == c { 1.0 } else { -1.0 };
                let mut margin = bias[c];
                for (idx, value) in row.iter() {
                    margin += weights[c][idx as usize] * value;
                }
                let violated = y * margin < 1.0;
                // L2 shrinkage on the whole weight row
                let shrink = 1.0 - eta * params.l2_lambda;
                for w in &mut weights[c] {
                    *w *= shrink;
                }
                if violated {
                    for (idx, value) in row.iter() {
                        weights[c][idx as usize] += eta * y * value;
                    }
                    bias[c] += eta * y;
                }
            }
            step += 1;
        }
    }
    Ok(SgdLinearModel {
        weights,
        bias,
        config: params.clone(),
    })
}

/// Regularized hinge objective for one class machine, used in tests.
#[cfg(test)]
fn binary_objective(
    dataset: &Dataset,
    class: usize,
    w: &[f64],
    b: f64,
    lambda: f64,
) -> f64 {
    let reg = 0.5 * lambda * w.iter().map(|x| x * x).sum::<f64>();
    let hinge: f64 = dataset
        .rows
        .iter()
        .zip(&dataset.labels)
        .map(|(row, &label)| {
            let y = if label == class { 1.0 } else { -1.0 };
            let mut margin = b;
            for (idx, value) in row.iter() {
                margin += w[idx as usize] * value;
            }
            (1.0 - y * margin).max(0.0)
        })
        .sum();
    reg + hinge / dataset.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable_1d() -> Dataset {
        let rows = vec![
            SparseVector::from_pairs(vec![(0, 2.0)]),
            SparseVector::from_pairs(vec![(0, -2.0)]),
        ];
        Dataset::new(rows, vec![0, 1], 1, 2).unwrap()
    }

    #[test]
    fn separable_data_reaches_full_training_accuracy() {
        let ds = separable_1d();
        let model = fit_sgd(&ds, &SgdParams::default(), 1).unwrap();
        for (row, &label) in ds.rows.iter().zip(&ds.labels) {
            assert_eq!(model.predict(row), label);
        }
    }

    #[test]
    fn zero_epochs_gives_zero_model() {
        let params = SgdParams {
            epochs: 0,
            ..SgdParams::default()
        };
        let model = fit_sgd(&separable_1d(), &params, 1).unwrap();
        assert!(model.weights.iter().flatten().all(|&w| w == 0.0));
        let probe = SparseVector::from_pairs(vec![(0, 5.0)]);
        assert_eq!(model.predict(&probe), 0);
    }

    #[test]
    fn huge_regularization_crushes_weights() {
        let params = SgdParams {
            l2_lambda: 1e6,
            ..SgdParams::default()
        };
        let model = fit_sgd(&separable_1d(), &params, 1).unwrap();
        let norm: f64 = model
            .weights
            .iter()
            .flatten()
            .map(|w| w * w)
            .sum::<f64>()
            .sqrt();
        assert!(norm < 1e-3, "norm = {norm}");
    }

    #[test]
    fn rejects_single_class() {
        let rows = vec![SparseVector::from_pairs(vec![(0, 1.0)])];
        let ds = Dataset::new(rows, vec![0], 1, 1).unwrap();
        assert!(matches!(
            fit_sgd(&ds, &SgdParams::default(), 0),
            Err(QcError::TooFewClasses { .. })
        ));
    }

    #[test]
    fn deterministic_given_seed() {
        let ds = separable_1d();
        let a = fit_sgd(&ds, &SgdParams::default(), 9).unwrap();
        let b = fit_sgd(&ds, &SgdParams::default(), 9).unwrap();
        assert_eq!(a.weights, b.weights);
        assert_eq!(a.bias, b.bias);
    }

    #[test]
    fn positive_scaling_preserves_argmax_with_zero_bias() {
        let model = SgdLinearModel {
            weights: vec![vec![1.0, -0.5], vec![-1.0, 0.5]],
            bias: vec![0.0, 0.0],
            config: SgdParams::default(),
        };
        let row = SparseVector::from_pairs(vec![(0, 0.3), (1, 0.7)]);
        let mut scaled = row.clone();
        scaled.scale_in_place(4.0);
        assert_eq!(model.predict(&row), model.predict(&scaled));
    }

    #[test]
    fn zero_model_predicts_class_zero() {
        let model = SgdLinearModel {
            weights: vec![vec![0.0; 3]; 4],
            bias: vec![0.0; 4],
            config: SgdParams::default(),
        };
        assert_eq!(model.predict(&SparseVector::from_pairs(vec![(1, 2.0)])), 0);
    }

    #[test]
    fn objective_finite_and_iterates_bounded() {
        let ds = separable_1d();
        let params = SgdParams::default();
        let model = fit_sgd(&ds, &params, 5).unwrap();
        for c in 0..2 {
            let obj = binary_objective(&ds, c, &model.weights[c], model.bias[c], params.l2_lambda);
            assert!(obj.is_finite());
        }
        let max_x = 2.0;
        let bound = max_x / params.l2_lambda + 10.0;
        for w in model.weights.iter().flatten() {
            assert!(w.abs() <= bound);
        }
    }
}
