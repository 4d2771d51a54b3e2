//! Brute-force k-nearest-neighbour on Euclidean distance. On L2-normalized
//! TF-IDF rows this ordering coincides with cosine distance.

use serde::{Deserialize, Serialize};

use crate::error::{QcError, Result};
use crate::features::SparseVector;
use crate::model::{parse_param, Dataset};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams { k: 13 }
    }
}

impl KnnParams {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "k" => self.k = parse_param(key, value)?,
            _ => {
                return Err(QcError::InvalidHyperparameter(format!(
                    "knn has no hyperparameter '{key}'"
                )))
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnnModel {
    pub stored_rows: Vec<SparseVector>,
    pub stored_labels: Vec<usize>,
    pub k: usize,
    n_features: usize,
    n_classes: usize,
}

pub fn fit_knn(dataset: &Dataset, params: &KnnParams) -> Result<KnnModel> {
    if params.k < 1 || params.k > dataset.len() {
        return Err(QcError::KnnKTooLarge {
            k: params.k,
            n: dataset.len(),
        });
    }
    Ok(KnnModel {
        stored_rows: dataset.rows.clone(),
        stored_labels: dataset.labels.clone(),
        k: params.k,
        n_features: dataset.n_features,
        n_classes: dataset.n_classes,
    })
}

impl KnnModel {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Majority label among the k nearest stored rows. Distance ties break
    /// toward the lower row index; vote ties toward the class of the nearest
    /// member among the tied classes.
    pub fn predict(&self, row: &SparseVector) -> usize {
        let mut dists: Vec<(f64, usize)> = self
            .stored_rows
            .iter()
            .enumerate()
            .map(|(i, stored)| (stored.sq_dist(row), i))
            .collect();
        dists.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let neighbours = &dists[..self.k];
        let mut votes = vec![0usize; self.n_classes];
        // rank (position in the sorted neighbour list) of each class's
        // nearest member, for vote tie breaking
        let mut first_rank = vec![usize::MAX; self.n_classes];
        for (rank, &(_, idx)) in neighbours.iter().enumerate() {
            let class = self.stored_labels[idx];
            votes[class] += 1;
            if first_rank[class] == usize::MAX {
                first_rank[class] = rank;
            }
        }
        let max_votes = *votes.iter().max().unwrap();
        (0..self.n_classes)
            .filter(|&c| votes[c] == max_votes)
            .min_by_key(|&c| first_rank[c])
            .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_dataset() -> Dataset {
        // 1-D points 0..10; labels: first 5 class 0, rest class 1
        let rows = (0..10)
            .map(|i| SparseVector::from_pairs(vec![(0, i as f64)]))
            .collect();
        let labels = (0..10).map(|i| usize::from(i >= 5)).collect();
        Dataset::new(rows, labels, 1, 2).unwrap()
    }

    #[test]
    fn k1_exact_match_returns_its_label() {
        let ds = grid_dataset();
        let model = fit_knn(&ds, &KnnParams { k: 1 }).unwrap();
        for (row, &label) in ds.rows.iter().zip(&ds.labels) {
            assert_eq!(model.predict(row), label);
        }
    }

    #[test]
    fn unanimous_neighbourhood() {
        let ds = grid_dataset();
        let model = fit_knn(&ds, &KnnParams { k: 3 }).unwrap();
        let query = SparseVector::from_pairs(vec![(0, 9.0)]);
        assert_eq!(model.predict(&query), 1);
    }

    #[test]
    fn majority_wins_7_to_6() {
        // 13 points: 7 of class 1 nearest? Build 7 class-0 near origin,
        // 6 class-1 farther out, k = 13 -> majority 0.
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..7 {
            rows.push(SparseVector::from_pairs(vec![(0, i as f64 * 0.1)]));
            labels.push(0);
        }
        for i in 0..6 {
            rows.push(SparseVector::from_pairs(vec![(0, 5.0 + i as f64 * 0.1)]));
            labels.push(1);
        }
        let ds = Dataset::new(rows, labels, 1, 2).unwrap();
        let model = fit_knn(&ds, &KnnParams { k: 13 }).unwrap();
        assert_eq!(model.predict(&SparseVector::empty()), 0);
    }

    #[test]
    fn k_equal_n_returns_plurality_class() {
        let ds = grid_dataset();
        let mut ds2 = ds.clone();
        ds2.labels[0] = 1; // class 1 now has 6 of 10
        let model = fit_knn(&ds2, &KnnParams { k: 10 }).unwrap();
        for q in [-5.0, 0.0, 3.3, 99.0] {
            let query = SparseVector::from_pairs(vec![(0, q)]);
            assert_eq!(model.predict(&query), 1);
        }
    }

    #[test]
    fn vote_tie_breaks_to_nearest_member() {
        // k=2: one of each class; class of the nearer row wins
        let rows = vec![
            SparseVector::from_pairs(vec![(0, 1.0)]),
            SparseVector::from_pairs(vec![(0, 3.0)]),
        ];
        let ds = Dataset::new(rows, vec![1, 0], 1, 2).unwrap();
        let model = fit_knn(&ds, &KnnParams { k: 2 }).unwrap();
        let query = SparseVector::from_pairs(vec![(0, 0.0)]);
        assert_eq!(model.predict(&query), 1);
    }

    #[test]
    fn rejects_k_larger_than_n() {
        let ds = grid_dataset();
        assert!(matches!(
            fit_knn(&ds, &KnnParams { k: 11 }),
            Err(QcError::KnnKTooLarge { k: 11, n: 10 })
        ));
    }

    #[test]
    fn permutation_invariant_for_untied_queries() {
        let ds = grid_dataset();
        let mut rows = ds.rows.clone();
        let mut labels = ds.labels.clone();
        rows.reverse();
        labels.reverse();
        let permuted = Dataset::new(rows, labels, 1, 2).unwrap();
        let a = fit_knn(&ds, &KnnParams { k: 3 }).unwrap();
        let b = fit_knn(&permuted, &KnnParams { k: 3 }).unwrap();
        for q in [0.2, 4.9, 7.7] {
            let query = SparseVector::from_pairs(vec![(0, q)]);
            assert_eq!(a.predict(&query), b.predict(&query));
        }
    }
}
