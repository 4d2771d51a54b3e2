//! Greedy decision-tree learner shared by the random forest (entropy
//! splits) and gradient boosting (variance-reduction splits on residuals).
//!
//! Candidate thresholds are midpoints between consecutive distinct sorted
//! values of each feature; implicit zeros of sparse rows are real values.
//! Ties in split quality break toward the lower feature index, then the
//! lower threshold (candidates are scanned in exactly that order, so the
//! first best candidate wins).

use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::features::SparseVector;

/// Gains closer than this are treated as equal when ranking splits.
const GAIN_TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitCriterion {
    Entropy,
    Variance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Internal {
        feature: u32,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Classification leaf: per-class sample counts.
    ClassLeaf { counts: Vec<u32> },
    /// Regression leaf.
    ValueLeaf { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
    pub criterion: SplitCriterion,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl DecisionTree {
    /// Index of the leaf this row falls into.
    pub fn leaf_of(&self, row: &SparseVector) -> usize {
        let mut node = 0usize;
        loop {
            match &self.nodes[node] {
                Node::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let value = row_value(row, *feature);
                    node = if value <= *threshold { *left } else { *right };
                }
                _ => return node,
            }
        }
    }

    /// Plurality class of the leaf, smallest class id on ties.
    pub fn predict_class(&self, row: &SparseVector) -> usize {
        match &self.nodes[self.leaf_of(row)] {
            Node::ClassLeaf { counts } => {
                let mut best = 0;
                for (i, &c) in counts.iter().enumerate().skip(1) {
                    if c > counts[best] {
                        best = i;
                    }
                }
                best
            }
            _ => unreachable!("classification tree has class leaves"),
        }
    }

    pub fn predict_value(&self, row: &SparseVector) -> f64 {
        match &self.nodes[self.leaf_of(row)] {
            Node::ValueLeaf { value } => *value,
            _ => unreachable!("regression tree has value leaves"),
        }
    }

    pub fn depth(&self) -> usize {
        fn rec(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Internal { left, right, .. } => 1 + rec(nodes, *left).max(rec(nodes, *right)),
                _ => 0,
            }
        }
        rec(&self.nodes, 0)
    }
}

fn row_value(row: &SparseVector, feature: u32) -> f64 {
    match row.indices.binary_search(&feature) {
        Ok(pos) => row.values[pos],
        Err(_) => 0.0,
    }
}

/// Shannon entropy in bits, with 0*log0 = 0.
pub fn entropy(class_counts: &[f64]) -> f64 {
    let total: f64 = class_counts.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let mut h = 0.0;
    for &c in class_counts {
        if c > 0.0 {
            let p = c / total;
            h -= p * p.log2();
        }
    }
    h
}

/// Information gain of a split, in bits.
pub fn information_gain(parent: &[f64], left: &[f64], right: &[f64]) -> f64 {
    let n: f64 = parent.iter().sum();
    if n <= 0.0 {
        return 0.0;
    }
    let nl: f64 = left.iter().sum();
    let nr: f64 = right.iter().sum();
    entropy(parent) - (nl / n) * entropy(left) - (nr / n) * entropy(right)
}

/// Column-major view of the training rows: per feature, the nonzero
/// (row, value) entries in row order.
pub struct ColumnIndex {
    cols: Vec<Vec<(u32, f64)>>,
}

impl ColumnIndex {
    pub fn build(rows: &[SparseVector], n_features: usize) -> Self {
        let mut cols = vec![Vec::new(); n_features];
        for (row_id, row) in rows.iter().enumerate() {
            for (idx, value) in row.iter() {
                cols[idx as usize].push((row_id as u32, value));
            }
        }
        ColumnIndex { cols }
    }

    fn column(&self, feature: usize) -> &[(u32, f64)] {
        &self.cols[feature]
    }

    pub fn n_features(&self) -> usize {
        self.cols.len()
    }
}

/// What the tree is fit to.
pub enum TreeTarget<'a> {
    Classes {
        labels: &'a [usize],
        n_classes: usize,
    },
    Regression {
        targets: &'a [f64],
    },
}

pub struct TreeConfig {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Number of features examined per split; None means all.
    pub features_per_split: Option<usize>,
}

struct Builder<'a> {
    rows: &'a [SparseVector],
    columns: &'a ColumnIndex,
    target: &'a TreeTarget<'a>,
    config: &'a TreeConfig,
    nodes: Vec<Node>,
    // scratch: per-row multiplicity within the current node
    in_node: Vec<u32>,
}

/// Greedy best-split tree construction over `samples` (row ids, possibly
/// with repetition from a bootstrap draw).
pub fn build_tree(
    rows: &[SparseVector],
    columns: &ColumnIndex,
    target: &TreeTarget,
    samples: &[usize],
    config: &TreeConfig,
    rng: Option<&mut ChaCha8Rng>,
) -> DecisionTree {
    assert!(!samples.is_empty(), "cannot build a tree on no samples");
    let criterion = match target {
        TreeTarget::Classes { .. } => SplitCriterion::Entropy,
        TreeTarget::Regression { .. } => SplitCriterion::Variance,
    };
    let mut builder = Builder {
        rows,
        columns,
        target,
        config,
        nodes: Vec::new(),
        in_node: vec![0; rows.len()],
    };
    let mut local_rng = rng;
    builder.grow(samples.to_vec(), 0, &mut local_rng);
    DecisionTree {
        nodes: builder.nodes,
        criterion,
        max_depth: config.max_depth,
        min_samples_split: config.min_samples_split,
    }
}

struct BestSplit {
    gain: f64,
    feature: u32,
    threshold: f64,
}

impl<'a> Builder<'a> {
    fn grow(&mut self, samples: Vec<usize>, depth: usize, rng: &mut Option<&mut ChaCha8Rng>) -> usize {
        let stop = samples.len() < self.config.min_samples_split
            || self.config.max_depth.is_some_and(|d| depth >= d)
            || self.is_pure(&samples);
        if !stop {
            if let Some(split) = self.best_split(&samples, rng) {
                let (left_samples, right_samples) =
                    self.partition(&samples, split.feature, split.threshold);
                if !left_samples.is_empty() && !right_samples.is_empty() {
                    let id = self.nodes.len();
                    self.nodes.push(Node::Internal {
                        feature: split.feature,
                        threshold: split.threshold,
                        left: 0,
                        right: 0,
                    });
                    let left = self.grow(left_samples, depth + 1, rng);
                    let right = self.grow(right_samples, depth + 1, rng);
                    if let Node::Internal {
                        left: l, right: r, ..
                    } = &mut self.nodes[id]
                    {
                        *l = left;
                        *r = right;
                    }
                    return id;
                }
            }
        }
        let leaf = self.make_leaf(&samples);
        let id = self.nodes.len();
        self.nodes.push(leaf);
        id
    }

    fn is_pure(&self, samples: &[usize]) -> bool {
        match self.target {
            TreeTarget::Classes { labels, .. } => {
                let first = labels[samples[0]];
                samples.iter().all(|&s| labels[s] == first)
            }
            TreeTarget::Regression { targets } => {
                let first = targets[samples[0]];
                samples.iter().all(|&s| targets[s] == first)
            }
        }
    }

    fn make_leaf(&self, samples: &[usize]) -> Node {
        match self.target {
            TreeTarget::Classes { labels, n_classes } => {
                let mut counts = vec![0u32; *n_classes];
                for &s in samples {
                    counts[labels[s]] += 1;
                }
                Node::ClassLeaf { counts }
            }
            TreeTarget::Regression { targets } => {
                let sum: f64 = samples.iter().map(|&s| targets[s]).sum();
                Node::ValueLeaf {
                    value: sum / samples.len() as f64,
                }
            }
        }
    }

    fn partition(&self, samples: &[usize], feature: u32, threshold: f64) -> (Vec<usize>, Vec<usize>) {
        let mut left = Vec::new();
        let mut right = Vec::new();
        for &s in samples {
            if row_value(&self.rows[s], feature) <= threshold {
                left.push(s);
            } else {
                right.push(s);
            }
        }
        (left, right)
    }

    fn candidate_features(
        &self,
        rng: &mut Option<&mut ChaCha8Rng>,
    ) -> Vec<usize> {
        let p = self.columns.n_features();
        match (self.config.features_per_split, rng) {
            (Some(m), Some(rng)) if m < p => {
                let mut picked: Vec<usize> = sample(*rng, p, m).into_iter().collect();
                picked.sort_unstable();
                picked
            }
            _ => (0..p).collect(),
        }
    }

    fn best_split(
        &mut self,
        samples: &[usize],
        rng: &mut Option<&mut ChaCha8Rng>,
    ) -> Option<BestSplit> {
        for &s in samples {
            self.in_node[s] += 1;
        }
        let features = self.candidate_features(rng);
        let mut best: Option<BestSplit> = None;
        for &feature in &features {
            self.scan_feature(samples, feature, &mut best);
        }
        for &s in samples {
            self.in_node[s] = 0;
        }
        best
    }

    /// Sweeps the sorted distinct values of one feature over the node's
    /// samples, evaluating every midpoint threshold.
    fn scan_feature(&self, samples: &[usize], feature: usize, best: &mut Option<BestSplit>) {
        // nonzero (value, row) entries among node samples
        let mut entries: Vec<(f64, u32)> = Vec::new();
        let mut nonzero_mult = 0u32;
        for &(row, value) in self.columns.column(feature) {
            let mult = self.in_node[row as usize];
            if mult > 0 {
                entries.push((value, row));
                nonzero_mult += mult;
            }
        }
        let zero_mult = samples.len() as u32 - nonzero_mult;
        entries.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        match self.target {
            TreeTarget::Classes { labels, n_classes } => {
                let mut parent = vec![0.0f64; *n_classes];
                for &s in samples {
                    parent[labels[s]] += 1.0;
                }
                // collapse equal values into (value, class-count) groups
                let mut groups: Vec<(f64, Vec<f64>)> = Vec::new();
                let mut nonzero_counts = vec![0.0f64; *n_classes];
                for &(value, row) in &entries {
                    if groups.last().map(|g| g.0) != Some(value) {
                        groups.push((value, vec![0.0; *n_classes]));
                    }
                    let mult = self.in_node[row as usize] as f64;
                    let label = labels[row as usize];
                    groups.last_mut().unwrap().1[label] += mult;
                    nonzero_counts[label] += mult;
                }
                if zero_mult > 0 {
                    let zero_counts: Vec<f64> = (0..*n_classes)
                        .map(|c| parent[c] - nonzero_counts[c])
                        .collect();
                    insert_group(&mut groups, 0.0, zero_counts);
                }
                sweep_classification(&parent, &groups, feature, best);
            }
            TreeTarget::Regression { targets } => {
                // groups: (value, count, sum, sum_sq)
                let mut groups: Vec<(f64, f64, f64, f64)> = Vec::new();
                let (mut nz_sum, mut nz_sq) = (0.0f64, 0.0f64);
                for &(value, row) in &entries {
                    if groups.last().map(|g| g.0) != Some(value) {
                        groups.push((value, 0.0, 0.0, 0.0));
                    }
                    let mult = self.in_node[row as usize] as f64;
                    let t = targets[row as usize];
                    let g = groups.last_mut().unwrap();
                    g.1 += mult;
                    g.2 += mult * t;
                    g.3 += mult * t * t;
                    nz_sum += mult * t;
                    nz_sq += mult * t * t;
                }
                if zero_mult > 0 {
                    let (mut total_sum, mut total_sq) = (0.0f64, 0.0f64);
                    for &s in samples {
                        total_sum += targets[s];
                        total_sq += targets[s] * targets[s];
                    }
                    let zero = (
                        0.0,
                        zero_mult as f64,
                        total_sum - nz_sum,
                        total_sq - nz_sq,
                    );
                    let pos = groups
                        .iter()
                        .position(|g| g.0 > 0.0)
                        .unwrap_or(groups.len());
                    groups.insert(pos, zero);
                }
                sweep_regression(&groups, feature, best);
            }
        }
    }
}

fn insert_group(groups: &mut Vec<(f64, Vec<f64>)>, value: f64, counts: Vec<f64>) {
    let pos = groups
        .iter()
        .position(|g| g.0 > value)
        .unwrap_or(groups.len());
    groups.insert(pos, (value, counts));
}

fn sweep_classification(
    parent: &[f64],
    groups: &[(f64, Vec<f64>)],
    feature: usize,
    best: &mut Option<BestSplit>,
) {
    if groups.len() < 2 {
        return;
    }
    let n_classes = parent.len();
    let mut left = vec![0.0f64; n_classes];
    let parent_h = entropy(parent);
    let n: f64 = parent.iter().sum();
    for w in groups.windows(2) {
        let (value, counts) = (&w[0].0, &w[0].1);
        for c in 0..n_classes {
            left[c] += counts[c];
        }
        let threshold = midpoint(*value, w[1].0);
        let nl: f64 = left.iter().sum();
        let nr = n - nl;
        let right: Vec<f64> = (0..n_classes).map(|c| parent[c] - left[c]).collect();
        let gain = parent_h - (nl / n) * entropy(&left) - (nr / n) * entropy(&right);
        consider(best, gain, feature as u32, threshold);
    }
}

fn sweep_regression(groups: &[(f64, f64, f64, f64)], feature: usize, best: &mut Option<BestSplit>) {
    // groups: (value, count, sum, sum_sq)
    if groups.len() < 2 {
        return;
    }
    let total_n: f64 = groups.iter().map(|g| g.1).sum();
    let total_sum: f64 = groups.iter().map(|g| g.2).sum();
    let total_sq: f64 = groups.iter().map(|g| g.3).sum();
    let parent_var = variance(total_n, total_sum, total_sq);
    let (mut nl, mut sl, mut ql) = (0.0, 0.0, 0.0);
    for w in groups.windows(2) {
        nl += w[0].1;
        sl += w[0].2;
        ql += w[0].3;
        let nr = total_n - nl;
        let sr = total_sum - sl;
        let qr = total_sq - ql;
        let threshold = midpoint(w[0].0, w[1].0);
        let gain = parent_var
            - (nl / total_n) * variance(nl, sl, ql)
            - (nr / total_n) * variance(nr, sr, qr);
        consider(best, gain, feature as u32, threshold);
    }
}

fn variance(n: f64, sum: f64, sum_sq: f64) -> f64 {
    if n <= 0.0 {
        return 0.0;
    }
    let mean = sum / n;
    (sum_sq / n - mean * mean).max(0.0)
}

fn midpoint(a: f64, b: f64) -> f64 {
    a + (b - a) / 2.0
}

fn consider(best: &mut Option<BestSplit>, gain: f64, feature: u32, threshold: f64) {
    // candidates arrive in (feature asc, threshold asc) order, so keeping
    // the incumbent on near-ties implements the stated tie rules
    match best {
        Some(b) if gain <= b.gain + GAIN_TIE_EPS => {}
        _ => {
            *best = Some(BestSplit {
                gain,
                feature,
                threshold,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_row(values: &[f64]) -> SparseVector {
        SparseVector::from_pairs(
            values
                .iter()
                .enumerate()
                .map(|(i, &v)| (i as u32, v))
                .collect(),
        )
    }

    fn classify_setup(
        rows: Vec<SparseVector>,
        labels: Vec<usize>,
        n_classes: usize,
        n_features: usize,
        max_depth: Option<usize>,
    ) -> DecisionTree {
        let columns = ColumnIndex::build(&rows, n_features);
        let target = TreeTarget::Classes {
            labels: &labels,
            n_classes,
        };
        let config = TreeConfig {
            max_depth,
            min_samples_split: 2,
            features_per_split: None,
        };
        let samples: Vec<usize> = (0..rows.len()).collect();
        build_tree(&rows, &columns, &target, &samples, &config, None)
    }

    #[test]
    fn entropy_values() {
        assert!((entropy(&[4.0, 4.0]) - 1.0).abs() < 1e-12);
        assert!(entropy(&[8.0, 0.0]).abs() < 1e-12);
        assert!((entropy(&[1.0, 1.0, 1.0, 1.0]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_split_gain() {
        let gain = information_gain(&[4.0, 4.0], &[4.0, 0.0], &[0.0, 4.0]);
        assert!((gain - 1.0).abs() < 1e-12);
    }

    #[test]
    fn xor_fits_at_depth_two() {
        let rows = vec![
            dense_row(&[0.0, 0.0]),
            dense_row(&[1.0, 1.0]),
            dense_row(&[0.0, 1.0]),
            dense_row(&[1.0, 0.0]),
        ];
        let labels = vec![0, 0, 1, 1];
        let tree = classify_setup(rows.clone(), labels.clone(), 2, 2, Some(2));
        for (row, &label) in rows.iter().zip(&labels) {
            assert_eq!(tree.predict_class(row), label);
        }
        assert!(tree.depth() <= 2);
    }

    #[test]
    fn single_class_is_single_leaf() {
        let rows = vec![dense_row(&[0.0]), dense_row(&[5.0])];
        let tree = classify_setup(rows, vec![1, 1], 2, 1, None);
        assert_eq!(tree.nodes.len(), 1);
        assert!(matches!(tree.nodes[0], Node::ClassLeaf { .. }));
    }

    #[test]
    fn depth_zero_is_plurality_root_leaf() {
        let rows = vec![dense_row(&[0.0]), dense_row(&[1.0]), dense_row(&[2.0])];
        let tree = classify_setup(rows, vec![1, 1, 0], 2, 1, Some(0));
        assert_eq!(tree.nodes.len(), 1);
        assert_eq!(tree.predict_class(&dense_row(&[0.0])), 1);
    }

    #[test]
    fn regression_splits_on_variance() {
        let rows = vec![
            dense_row(&[1.0]),
            dense_row(&[2.0]),
            dense_row(&[10.0]),
            dense_row(&[11.0]),
        ];
        let targets = vec![0.0, 0.1, 5.0, 5.1];
        let columns = ColumnIndex::build(&rows, 1);
        let target = TreeTarget::Regression { targets: &targets };
        let config = TreeConfig {
            max_depth: Some(1),
            min_samples_split: 2,
            features_per_split: None,
        };
        let samples: Vec<usize> = (0..4).collect();
        let tree = build_tree(&rows, &columns, &target, &samples, &config, None);
        assert!((tree.predict_value(&dense_row(&[1.5])) - 0.05).abs() < 1e-12);
        assert!((tree.predict_value(&dense_row(&[10.5])) - 5.05).abs() < 1e-12);
    }

    #[test]
    fn implicit_zeros_participate_in_splits() {
        // rows 0,1 have no entry for feature 0 (implicit zero)
        let rows = vec![
            SparseVector::empty(),
            SparseVector::empty(),
            dense_row(&[3.0]),
            dense_row(&[4.0]),
        ];
        let tree = classify_setup(rows.clone(), vec![0, 0, 1, 1], 2, 1, None);
        assert_eq!(tree.predict_class(&rows[0]), 0);
        assert_eq!(tree.predict_class(&rows[2]), 1);
    }

    #[test]
    fn bootstrap_multiplicity_respected() {
        // sample 0 drawn three times outweighs sample 1 drawn once
        let rows = vec![dense_row(&[0.0]), dense_row(&[0.0])];
        let labels = vec![0, 1];
        let columns = ColumnIndex::build(&rows, 1);
        let target = TreeTarget::Classes {
            labels: &labels,
            n_classes: 2,
        };
        let config = TreeConfig {
            max_depth: None,
            min_samples_split: 2,
            features_per_split: None,
        };
        let tree = build_tree(&rows, &columns, &target, &[0, 0, 0, 1], &config, None);
        assert_eq!(tree.predict_class(&rows[0]), 0);
    }
}
