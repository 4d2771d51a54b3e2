//! Feed-forward ReLU network with softmax output, trained full-batch by
//! L-BFGS. Default layout is a single hidden layer of 100 units; the layout
//! is a sequence so deeper stacks can be configured.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifiers::lbfgs::{lbfgs_minimize, LbfgsOptions};
use crate::classifiers::nbc::argmax_first;
use crate::error::{QcError, Result};
use crate::features::SparseVector;
use crate::model::{parse_param, Dataset};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlpParams {
    pub hidden_layers: Vec<usize>,
    pub l2_lambda: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub lbfgs_memory: usize,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            hidden_layers: vec![100],
            l2_lambda: 1e-4,
            max_iter: 200,
            tol: 1e-5,
            lbfgs_memory: 10,
        }
    }
}

impl MlpParams {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "hidden_units" => self.hidden_layers = vec![parse_param(key, value)?],
            "hidden_layers" => {
                let layers: std::result::Result<Vec<usize>, _> =
                    value.split(',').map(|v| v.trim().parse()).collect();
                self.hidden_layers = layers.map_err(|_| {
                    QcError::InvalidHyperparameter(format!("hidden_layers={value}"))
                })?;
            }
            "l2_lambda" => self.l2_lambda = parse_param(key, value)?,
            "max_iter" => self.max_iter = parse_param(key, value)?,
            "tol" => self.tol = parse_param(key, value)?,
            "lbfgs_memory" => self.lbfgs_memory = parse_param(key, value)?,
            _ => {
                return Err(QcError::InvalidHyperparameter(format!(
                    "mlp has no hyperparameter '{key}'"
                )))
            }
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if self.hidden_layers.is_empty() || self.hidden_layers.contains(&0) {
            return Err(QcError::InvalidHyperparameter(
                "hidden layers must all have >= 1 unit".into(),
            ));
        }
        Ok(())
    }
}

/// Layer sizes including input and output: [p, h1, ..., hk, C].
fn layer_sizes(n_features: usize, hidden: &[usize], n_classes: usize) -> Vec<usize> {
    let mut sizes = Vec::with_capacity(hidden.len() + 2);
    sizes.push(n_features);
    sizes.extend_from_slice(hidden);
    sizes.push(n_classes);
    sizes
}

fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

/// Offset of (weights, biases) for layer l in the flattened parameter
/// vector. Weights are row-major by input unit.
fn layer_offsets(sizes: &[usize]) -> Vec<(usize, usize)> {
    let mut offsets = Vec::new();
    let mut cursor = 0;
    for w in sizes.windows(2) {
        let weights = cursor;
        cursor += w[0] * w[1];
        let biases = cursor;
        cursor += w[1];
        offsets.push((weights, biases));
    }
    offsets
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlpModel {
    pub sizes: Vec<usize>,
    pub params: Vec<f64>,
    pub config: MlpParams,
}

impl MlpModel {
    pub fn n_features(&self) -> usize {
        self.sizes[0]
    }

    /// Raw output scores (pre-softmax) for one row.
    pub fn scores(&self, row: &SparseVector) -> Vec<f64> {
        forward(&self.sizes, &self.params, row).pop().unwrap()
    }

    pub fn probabilities(&self, row: &SparseVector) -> Vec<f64> {
        softmax(&self.scores(row))
    }

    pub fn predict(&self, row: &SparseVector) -> usize {
        argmax_first(&self.scores(row))
    }
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

/// Activations of every non-input layer; the last entry holds raw output
/// scores (no activation).
fn forward(sizes: &[usize], params: &[f64], row: &SparseVector) -> Vec<Vec<f64>> {
    let offsets = layer_offsets(sizes);
    let n_layers = sizes.len() - 1;
    let mut activations: Vec<Vec<f64>> = Vec::with_capacity(n_layers);
    for l in 0..n_layers {
        let (w_off, b_off) = offsets[l];
        let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
        let mut z: Vec<f64> = params[b_off..b_off + fan_out].to_vec();
        if l == 0 {
            for (idx, value) in row.iter() {
                let base = w_off + idx as usize * fan_out;
                for j in 0..fan_out {
                    z[j] += value * params[base + j];
                }
            }
        } else {
            let prev = &activations[l - 1];
            for (i, &a) in prev.iter().enumerate() {
                if a != 0.0 {
                    let base = w_off + i * fan_out;
                    for j in 0..fan_out {
                        z[j] += a * params[base + j];
                    }
                }
            }
        }
        if l + 1 < n_layers {
            for v in &mut z {
                *v = v.max(0.0); // ReLU
            }
        }
        let _ = fan_in;
        activations.push(z);
    }
    activations
}

/// Mean softmax cross-entropy plus (lambda/2)||W||^2 (biases unpenalized),
/// with the gradient computed by backpropagation.
pub fn mlp_loss_and_gradient(
    params: &[f64],
    dataset: &Dataset,
    sizes: &[usize],
    l2_lambda: f64,
) -> (f64, Vec<f64>) {
    assert!(
        params.iter().all(|p| p.is_finite()),
        "non-finite parameters"
    );
    let offsets = layer_offsets(sizes);
    let n_layers = sizes.len() - 1;
    let n = dataset.len() as f64;
    let mut grad = vec![0.0f64; params.len()];
    let mut loss = 0.0;
    for (row, &label) in dataset.rows.iter().zip(&dataset.labels) {
        let activations = forward(sizes, params, row);
        let probs = softmax(activations.last().unwrap());
        loss -= probs[label].max(1e-300).ln();
        // delta at the output layer
        let mut delta: Vec<f64> = probs;
        delta[label] -= 1.0;
        for l in (0..n_layers).rev() {
            let (w_off, b_off) = offsets[l];
            let fan_out = sizes[l + 1];
            for (j, &d) in delta.iter().enumerate() {
                grad[b_off + j] += d;
            }
            if l == 0 {
                for (idx, value) in row.iter() {
                    let base = w_off + idx as usize * fan_out;
                    for (j, &d) in delta.iter().enumerate() {
                        grad[base + j] += value * d;
                    }
                }
            } else {
                let prev = &activations[l - 1];
                for (i, &a) in prev.iter().enumerate() {
                    if a != 0.0 {
                        let base = w_off + i * fan_out;
                        for (j, &d) in delta.iter().enumerate() {
                            grad[base + j] += a * d;
                        }
                    }
                }
                // propagate through the ReLU
                let mut new_delta = vec![0.0f64; sizes[l]];
                for (i, nd) in new_delta.iter_mut().enumerate() {
                    if prev[i] > 0.0 {
                        let base = w_off + i * fan_out;
                        let mut sum = 0.0;
                        for (j, &d) in delta.iter().enumerate() {
                            sum += params[base + j] * d;
                        }
                        *nd = sum;
                    }
                }
                delta = new_delta;
            }
        }
    }
    loss /= n;
    for g in &mut grad {
        *g /= n;
    }
    // L2 on weights only
    let mut reg = 0.0;
    for (l, &(w_off, b_off)) in offsets.iter().enumerate() {
        let _ = l;
        for i in w_off..b_off {
            reg += params[i] * params[i];
            grad[i] += l2_lambda * params[i];
        }
    }
    loss += 0.5 * l2_lambda * reg;
    (loss, grad)
}

fn init_params(sizes: &[usize], seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = vec![0.0f64; param_count(sizes)];
    for (l, &(w_off, b_off)) in layer_offsets(sizes).iter().enumerate() {
        let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        for p in params[w_off..b_off].iter_mut() {
            *p = rng.gen_range(-bound..bound);
        }
    }
    params
}

pub fn fit_mlp(dataset: &Dataset, config: &MlpParams, seed: u64) -> Result<MlpModel> {
    config.validate()?;
    if dataset.n_classes < 2 {
        return Err(QcError::TooFewClasses {
            need: 2,
            got: dataset.n_classes,
        });
    }
    let sizes = layer_sizes(dataset.n_features, &config.hidden_layers, dataset.n_classes);
    let x0 = init_params(&sizes, seed);
    let options = LbfgsOptions {
        memory: config.lbfgs_memory,
        tol: config.tol,
        max_iter: config.max_iter,
        ..LbfgsOptions::default()
    };
    let result = lbfgs_minimize(
        |params| mlp_loss_and_gradient(params, dataset, &sizes, config.l2_lambda),
        &x0,
        &options,
    );
    Ok(MlpModel {
        sizes,
        params: result.x,
        config: config.clone(),
    })
}
