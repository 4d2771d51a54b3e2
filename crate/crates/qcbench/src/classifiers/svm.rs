//! RBF-kernel soft-margin SVM trained by sequential minimal optimization,
//! aggregated one-vs-one over class pairs.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{QcError, Result};
use crate::features::SparseVector;
use crate::model::{parse_param, Dataset};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GammaSpec {
    /// 1 / (p * Var(all feature values, implicit zeros included)).
    Scale,
    Value(f64),
}

impl std::str::FromStr for GammaSpec {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "scale" {
            return Ok(GammaSpec::Scale);
        }
        s.parse::<f64>()
            .map(GammaSpec::Value)
            .map_err(|_| format!("gamma must be 'scale' or a number, got '{s}'"))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    pub gamma: GammaSpec,
    pub tol: f64,
    /// Consecutive violation-free full sweeps required to stop.
    pub max_passes: usize,
    /// Kernel cache budget, in cached Gram columns.
    pub cache_size: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            gamma: GammaSpec::Scale,
            tol: 1e-3,
            max_passes: 1,
            cache_size: 4096,
        }
    }
}

impl SvmParams {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "c" => self.c = parse_param(key, value)?,
            "gamma" => {
                self.gamma = value
                    .parse()
                    .map_err(|e: String| QcError::InvalidHyperparameter(e))?
            }
            "tol" => self.tol = parse_param(key, value)?,
            "max_passes" => self.max_passes = parse_param(key, value)?,
            "cache_size" => self.cache_size = parse_param(key, value)?,
            _ => {
                return Err(QcError::InvalidHyperparameter(format!(
                    "svm has no hyperparameter '{key}'"
                )))
            }
        }
        Ok(())
    }
}

/// exp(-gamma * ||x - y||^2), computed sparsely.
pub fn kernel_rbf(x: &SparseVector, y: &SparseVector, gamma: f64) -> f64 {
    (-gamma * x.sq_dist(y)).exp()
}

/// Resolves `GammaSpec::Scale` against a dataset.
pub fn resolve_gamma(spec: GammaSpec, rows: &[SparseVector], n_features: usize) -> f64 {
    match spec {
        GammaSpec::Value(g) => g,
        GammaSpec::Scale => {
            let total = (rows.len() * n_features) as f64;
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for row in rows {
                for &v in &row.values {
                    sum += v;
                    sum_sq += v * v;
                }
            }
            let mean = sum / total;
            let var = sum_sq / total - mean * mean;
            if var > 0.0 {
                1.0 / (n_features as f64 * var)
            } else {
                1.0
            }
        }
    }
}

/// One trained binary machine. Only rows with nonzero alpha are stored.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BinarySvm {
    pub support_rows: Vec<SparseVector>,
    /// alpha_i * y_i per support row.
    pub dual_coef: Vec<f64>,
    pub intercept: f64,
    pub c: f64,
    pub gamma: f64,
}

impl BinarySvm {
    pub fn decision(&self, row: &SparseVector) -> f64 {
        let mut f = self.intercept;
        for (sv, coef) in self.support_rows.iter().zip(&self.dual_coef) {
            f += coef * kernel_rbf(sv, row, self.gamma);
        }
        f
    }

    pub fn n_support(&self) -> usize {
        self.support_rows.len()
    }
}

struct KernelCache<'a> {
    rows: &'a [SparseVector],
    sq_norms: Vec<f64>,
    gamma: f64,
    columns: HashMap<usize, Vec<f64>>,
    order: VecDeque<usize>,
    budget: usize,
}

impl<'a> KernelCache<'a> {
    fn new(rows: &'a [SparseVector], gamma: f64, budget: usize) -> Self {
        let sq_norms = rows.iter().map(|r| r.dot(r)).collect();
        KernelCache {
            rows,
            sq_norms,
            gamma,
            columns: HashMap::new(),
            order: VecDeque::new(),
            budget: budget.max(2),
        }
    }

    fn column(&mut self, i: usize) -> &[f64] {
        if !self.columns.contains_key(&i) {
            if self.columns.len() >= self.budget {
                if let Some(evict) = self.order.pop_front() {
                    self.columns.remove(&evict);
                }
            }
            let xi = &self.rows[i];
            let col: Vec<f64> = self
                .rows
                .iter()
                .enumerate()
                .map(|(j, xj)| {
                    let d2 = self.sq_norms[i] + self.sq_norms[j] - 2.0 * xi.dot(xj);
                    (-self.gamma * d2.max(0.0)).exp()
                })
                .collect();
            self.columns.insert(i, col);
            self.order.push_back(i);
        }
        &self.columns[&i]
    }
}

struct SmoSolver<'a> {
    rows: &'a [SparseVector],
    y: &'a [f64],
    c: f64,
    tol: f64,
    alpha: Vec<f64>,
    b: f64,
    errors: Vec<f64>,
    cache: KernelCache<'a>,
}

const SMO_EPS: f64 = 1e-12;
// hard cap on full sweeps so pathological inputs terminate
const MAX_SWEEPS: usize = 1000;

impl<'a> SmoSolver<'a> {
    fn new(rows: &'a [SparseVector], y: &'a [f64], params: &SvmParams, gamma: f64) -> Self {
        let n = rows.len();
        SmoSolver {
            rows,
            y,
            c: params.c,
            tol: params.tol,
            alpha: vec![0.0; n],
            b: 0.0,
            // f(x) = 0 initially, so E_i = -y_i
            errors: y.iter().map(|&yi| -yi).collect(),
            cache: KernelCache::new(rows, gamma, params.cache_size),
        }
    }

    fn solve(&mut self, max_passes: usize) {
        let n = self.rows.len();
        let mut examine_all = true;
        let mut clean_sweeps = 0;
        for _ in 0..MAX_SWEEPS {
            let mut changed = 0;
            if examine_all {
                for i in 0..n {
                    changed += usize::from(self.examine(i));
                }
                if changed == 0 {
                    clean_sweeps += 1;
                    if clean_sweeps >= max_passes {
                        break;
                    }
                } else {
                    clean_sweeps = 0;
                    examine_all = false;
                }
            } else {
                for i in 0..n {
                    if self.alpha[i] > SMO_EPS && self.alpha[i] < self.c - SMO_EPS {
                        changed += usize::from(self.examine(i));
                    }
                }
                if changed == 0 {
                    examine_all = true;
                }
            }
        }
    }

    fn examine(&mut self, i2: usize) -> bool {
        let y2 = self.y[i2];
        let alph2 = self.alpha[i2];
        let e2 = self.errors[i2];
        let r2 = e2 * y2;
        let violates = (r2 < -self.tol && alph2 < self.c - SMO_EPS)
            || (r2 > self.tol && alph2 > SMO_EPS);
        if !violates {
            return false;
        }
        // second choice: maximize |E1 - E2| over non-bound points
        let mut best: Option<(f64, usize)> = None;
        for i1 in 0..self.rows.len() {
            if i1 == i2 || self.alpha[i1] <= SMO_EPS || self.alpha[i1] >= self.c - SMO_EPS {
                continue;
            }
            let gap = (self.errors[i1] - e2).abs();
            if best.is_none_or(|(g, _)| gap > g) {
                best = Some((gap, i1));
            }
        }
        if let Some((_, i1)) = best {
            if self.take_step(i1, i2) {
                return true;
            }
        }
        // fall back: all non-bound, then all
        for i1 in 0..self.rows.len() {
            if i1 != i2
                && self.alpha[i1] > SMO_EPS
                && self.alpha[i1] < self.c - SMO_EPS
                && self.take_step(i1, i2)
            {
                return true;
            }
        }
        for i1 in 0..self.rows.len() {
            if i1 != i2 && self.take_step(i1, i2) {
                return true;
            }
        }
        false
    }

    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let (alph1, alph2) = (self.alpha[i1], self.alpha[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let (e1, e2) = (self.errors[i1], self.errors[i2]);
        let s = y1 * y2;
        let (low, high) = if s < 0.0 {
            (
                (alph2 - alph1).max(0.0),
                (self.c + alph2 - alph1).min(self.c),
            )
        } else {
            (
                (alph2 + alph1 - self.c).max(0.0),
                (alph2 + alph1).min(self.c),
            )
        };
        if high - low < SMO_EPS {
            return false;
        }
        let k11 = self.cache.column(i1)[i1];
        let k12 = self.cache.column(i1)[i2];
        let k22 = self.cache.column(i2)[i2];
        let eta = k11 + k22 - 2.0 * k12;
        let mut a2 = if eta > SMO_EPS {
            (alph2 + y2 * (e1 - e2) / eta).clamp(low, high)
        } else {
            // flat direction: evaluate the objective at both ends
            let f1 = y1 * (e1 + self.b) - alph1 * k11 - s * alph2 * k12;
            let f2 = y2 * (e2 + self.b) - s * alph1 * k12 - alph2 * k22;
            let l1 = alph1 + s * (alph2 - low);
            let h1 = alph1 + s * (alph2 - high);
            let lobj =
                l1 * f1 + low * f2 + 0.5 * l1 * l1 * k11 + 0.5 * low * low * k22 + s * low * l1 * k12;
            let hobj = h1 * f1
                + high * f2
                + 0.5 * h1 * h1 * k11
                + 0.5 * high * high * k22
                + s * high * h1 * k12;
            if lobj < hobj - SMO_EPS {
                low
            } else if hobj < lobj - SMO_EPS {
                high
            } else {
                return false;
            }
        };
        if a2 < SMO_EPS {
            a2 = 0.0;
        } else if a2 > self.c - SMO_EPS {
            a2 = self.c;
        }
        if (a2 - alph2).abs() < SMO_EPS * (a2 + alph2 + SMO_EPS) {
            return false;
        }
        let a1 = alph1 + s * (alph2 - a2);
        let a1 = a1.clamp(0.0, self.c);

        // intercept update from the two changed multipliers
        let b1 = e1 + y1 * (a1 - alph1) * k11 + y2 * (a2 - alph2) * k12 + self.b;
        let b2 = e2 + y1 * (a1 - alph1) * k12 + y2 * (a2 - alph2) * k22 + self.b;
        let new_b = if a1 > SMO_EPS && a1 < self.c - SMO_EPS {
            b1
        } else if a2 > SMO_EPS && a2 < self.c - SMO_EPS {
            b2
        } else {
            (b1 + b2) / 2.0
        };
        let db = new_b - self.b;
        let (da1, da2) = (a1 - alph1, a2 - alph2);
        let col1: Vec<f64> = self.cache.column(i1).to_vec();
        let col2: Vec<f64> = self.cache.column(i2).to_vec();
        for j in 0..self.errors.len() {
            self.errors[j] += y1 * da1 * col1[j] + y2 * da2 * col2[j] - db;
        }
        self.alpha[i1] = a1;
        self.alpha[i2] = a2;
        self.b = new_b;
        true
    }
}

/// Trains one binary machine on rows labeled +/-1.
pub fn train_smo(
    rows: &[SparseVector],
    y: &[f64],
    params: &SvmParams,
    gamma: f64,
) -> Result<BinarySvm> {
    if !y.iter().any(|&v| v > 0.0) || !y.iter().any(|&v| v < 0.0) {
        return Err(QcError::Other("smo needs both labels present".into()));
    }
    let mut solver = SmoSolver::new(rows, y, params, gamma);
    solver.solve(params.max_passes.max(1));
    let mut support_rows = Vec::new();
    let mut dual_coef = Vec::new();
    for (i, &a) in solver.alpha.iter().enumerate() {
        if a > SMO_EPS {
            support_rows.push(rows[i].clone());
            dual_coef.push(a * y[i]);
        }
    }
    Ok(BinarySvm {
        support_rows,
        dual_coef,
        // stored decision is f(x) = sum coef K + intercept; solver tracked
        // E = f - y with f = sum - b, so flip the sign here
        intercept: -solver.b,
        c: params.c,
        gamma,
    })
}

/// Diagnostics for the dual solution, used by tests and the acceptance
/// suite.
pub struct DualReport {
    pub min_alpha: f64,
    pub max_alpha: f64,
    pub eq_constraint: f64,
    pub max_unbound_violation: f64,
}

pub fn dual_report(machine: &BinarySvm, rows: &[SparseVector], y: &[f64]) -> DualReport {
    let mut min_alpha = f64::INFINITY;
    let mut max_alpha = f64::NEG_INFINITY;
    let mut eq = 0.0;
    for &coef in &machine.dual_coef {
        let a = coef.abs();
        min_alpha = min_alpha.min(a);
        max_alpha = max_alpha.max(a);
        eq += coef;
    }
    let mut max_violation: f64 = 0.0;
    for (row, &yi) in rows.iter().zip(y) {
        // locate this row's alpha if it is a support vector
        for (sv, &coef) in machine.support_rows.iter().zip(&machine.dual_coef) {
            if sv == row && coef.signum() == yi.signum() {
                let a = coef.abs();
                if a > SMO_EPS && a < machine.c - SMO_EPS {
                    let f = machine.decision(row);
                    max_violation = max_violation.max((yi - f).abs());
                }
            }
        }
    }
    DualReport {
        min_alpha,
        max_alpha,
        eq_constraint: eq,
        max_unbound_violation: max_violation,
    }
}

/// One binary machine per unordered class pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OvoSvmModel {
    /// Keyed by (low class, high class); decision > 0 votes for the low
    /// class.
    pub machines: Vec<((usize, usize), BinarySvm)>,
    pub n_classes: usize,
    n_features: usize,
}

impl OvoSvmModel {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Plurality of pairwise winners; vote ties break by the largest sum of
    /// signed decision values among tied classes, then smallest class id.
    pub fn predict(&self, row: &SparseVector) -> usize {
        let mut votes = vec![0usize; self.n_classes];
        let mut signed_sum = vec![0.0f64; self.n_classes];
        for ((a, b), machine) in &self.machines {
            let f = machine.decision(row);
            if f > 0.0 {
                votes[*a] += 1;
            } else {
                votes[*b] += 1;
            }
            signed_sum[*a] += f;
            signed_sum[*b] -= f;
        }
        let max_votes = *votes.iter().max().unwrap();
        let mut best: Option<usize> = None;
        for c in 0..self.n_classes {
            if votes[c] == max_votes {
                match best {
                    None => best = Some(c),
                    Some(cur) if signed_sum[c] > signed_sum[cur] => best = Some(c),
                    _ => {}
                }
            }
        }
        best.unwrap()
    }
}

pub fn fit_svm_ovo(dataset: &Dataset, params: &SvmParams, _seed: u64) -> Result<OvoSvmModel> {
    if dataset.n_classes < 2 {
        return Err(QcError::TooFewClasses {
            need: 2,
            got: dataset.n_classes,
        });
    }
    let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); dataset.n_classes];
    for (i, &label) in dataset.labels.iter().enumerate() {
        per_class[label].push(i);
    }
    for (c, members) in per_class.iter().enumerate() {
        if members.is_empty() {
            return Err(QcError::EmptyClass(format!("class id {c}")));
        }
    }
    let gamma = resolve_gamma(params.gamma, &dataset.rows, dataset.n_features);
    let mut machines = Vec::new();
    for a in 0..dataset.n_classes {
        for b in (a + 1)..dataset.n_classes {
            let mut rows = Vec::new();
            let mut y = Vec::new();
            for &i in &per_class[a] {
                rows.push(dataset.rows[i].clone());
                y.push(1.0);
            }
            for &i in &per_class[b] {
                rows.push(dataset.rows[i].clone());
                y.push(-1.0);
            }
            let machine = train_smo(&rows, &y, params, gamma)?;
            machines.push(((a, b), machine));
        }
    }
    Ok(OvoSvmModel {
        machines,
        n_classes: dataset.n_classes,
        n_features: dataset.n_features,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_identities() {
        let x = SparseVector::from_pairs(vec![(0, 1.0), (3, -2.0)]);
        let y = SparseVector::from_pairs(vec![(1, 0.5)]);
        assert!((kernel_rbf(&x, &x, 0.7) - 1.0).abs() < 1e-15);
        assert!((kernel_rbf(&x, &y, 0.3) - kernel_rbf(&y, &x, 0.3)).abs() < 1e-15);
        // gamma=0.5, ||x-y||^2 = 2 -> e^-1
        let a = SparseVector::from_pairs(vec![(0, 1.0)]);
        let b = SparseVector::from_pairs(vec![(1, 1.0)]);
        assert!((kernel_rbf(&a, &b, 0.5) - (-1.0f64).exp()).abs() < 1e-12);
        assert!((kernel_rbf(&a, &b, 0.5) - 0.367_879_4).abs() < 1e-6);
    }

    #[test]
    fn two_point_problem_is_symmetric() {
        let rows = vec![
            SparseVector::from_pairs(vec![(0, 1.0)]),
            SparseVector::from_pairs(vec![(0, -1.0)]),
        ];
        let y = vec![1.0, -1.0];
        let params = SvmParams {
            c: 1e6,
            gamma: GammaSpec::Value(0.5),
            ..SvmParams::default()
        };
        let machine = train_smo(&rows, &y, &params, 0.5).unwrap();
        assert_eq!(machine.n_support(), 2);
        // alpha_1 = alpha_2 by symmetry, b = 0
        assert!((machine.dual_coef[0] + machine.dual_coef[1]).abs() < 1e-9);
        assert!(machine.intercept.abs() < 1e-9);
        assert!(machine.decision(&rows[0]) > 0.0);
        assert!(machine.decision(&rows[1]) < 0.0);
    }

    fn blobs_2d() -> (Vec<SparseVector>, Vec<f64>) {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..10 {
            let dx = (i % 3) as f64 * 0.1;
            let dy = (i % 5) as f64 * 0.1;
            rows.push(SparseVector::from_pairs(vec![(0, dx), (1, dy)]));
            y.push(1.0);
            rows.push(SparseVector::from_pairs(vec![(0, 3.0 + dx), (1, 3.0 + dy)]));
            y.push(-1.0);
        }
        (rows, y)
    }

    #[test]
    fn separable_blobs_classified_perfectly() {
        let (rows, y) = blobs_2d();
        let params = SvmParams::default();
        let machine = train_smo(&rows, &y, &params, 0.5).unwrap();
        for (row, &yi) in rows.iter().zip(&y) {
            assert_eq!(machine.decision(row) > 0.0, yi > 0.0);
        }
    }

    #[test]
    fn dual_feasibility_after_training() {
        let (rows, y) = blobs_2d();
        let params = SvmParams::default();
        let machine = train_smo(&rows, &y, &params, 0.5).unwrap();
        let report = dual_report(&machine, &rows, &y);
        assert!(report.min_alpha >= 0.0);
        assert!(report.max_alpha <= params.c + 1e-9);
        assert!(report.eq_constraint.abs() <= 1e-6);
        assert!(report.max_unbound_violation <= params.tol + 1e-6);
    }

    #[test]
    fn rejects_single_label() {
        let rows = vec![SparseVector::from_pairs(vec![(0, 1.0)])];
        assert!(train_smo(&rows, &[1.0], &SvmParams::default(), 0.5).is_err());
    }

    fn three_class_blobs() -> Dataset {
        let centers = [(0.0, 0.0), (4.0, 0.0), (0.0, 4.0)];
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (c, (cx, cy)) in centers.iter().enumerate() {
            for i in 0..8 {
                let dx = (i % 4) as f64 * 0.2;
                let dy = (i / 4) as f64 * 0.2;
                rows.push(SparseVector::from_pairs(vec![(0, cx + dx), (1, cy + dy)]));
                labels.push(c);
            }
        }
        Dataset::new(rows, labels, 2, 3).unwrap()
    }

    #[test]
    fn ovo_three_class_blobs() {
        let ds = three_class_blobs();
        let model = fit_svm_ovo(&ds, &SvmParams::default(), 0).unwrap();
        assert_eq!(model.machines.len(), 3);
        let mut correct = 0;
        for (row, &label) in ds.rows.iter().zip(&ds.labels) {
            if model.predict(row) == label {
                correct += 1;
            }
        }
        assert!(correct as f64 / ds.len() as f64 >= 0.95);
    }

    #[test]
    fn ovo_rejects_empty_class() {
        let rows = vec![
            SparseVector::from_pairs(vec![(0, 1.0)]),
            SparseVector::from_pairs(vec![(0, 2.0)]),
        ];
        let ds = Dataset::new(rows, vec![0, 0], 1, 2).unwrap();
        assert!(matches!(
            fit_svm_ovo(&ds, &SvmParams::default(), 0),
            Err(QcError::EmptyClass(_))
        ));
    }

    #[test]
    fn gamma_scale_is_positive() {
        let (rows, _) = blobs_2d();
        let gamma = resolve_gamma(GammaSpec::Scale, &rows, 2);
        assert!(gamma > 0.0);
        // degenerate all-equal data still resolves positive
        let same = vec![SparseVector::empty(), SparseVector::empty()];
        assert!(resolve_gamma(GammaSpec::Scale, &same, 2) > 0.0);
    }
}
