//! Stratified k-fold cross-validation, confusion matrices, accuracy and F1
//! metrics, and the with/without-stop-words comparison protocol.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{QuestionRecord, StopWordList, Taxonomy};
use crate::error::{QcError, Result};
use crate::features::{
    build_vocabulary, terms_of_text, vectorize_tfidf, FeatureConfig, StopwordMode,
};
use crate::model::{
    fit, ClassifierKind, Dataset, Granularity, Hyperparams, LabelEncoding,
};

/// Published reference results: (classifier, stop-word mode) -> (accuracy,
/// F1). These are display-only comparison values; the source corpus is not
/// public, so they are not test oracles.
pub const REFERENCE_RESULTS: &[(ClassifierKind, StopwordMode, f64, f64)] = &[
    (ClassifierKind::Mlp, StopwordMode::Remove, 0.779, 0.761),
    (ClassifierKind::Svm, StopwordMode::Remove, 0.741, 0.705),
    (ClassifierKind::Nbc, StopwordMode::Remove, 0.724, 0.693),
    (ClassifierKind::Sgd, StopwordMode::Remove, 0.797, 0.775),
    (ClassifierKind::Gbc, StopwordMode::Remove, 0.701, 0.686),
    (ClassifierKind::Knn, StopwordMode::Remove, 0.376, 0.439),
    (ClassifierKind::Rf, StopwordMode::Remove, 0.712, 0.680),
    (ClassifierKind::Mlp, StopwordMode::Keep, 0.83, 0.810),
    (ClassifierKind::Svm, StopwordMode::Keep, 0.801, 0.765),
    (ClassifierKind::Nbc, StopwordMode::Keep, 0.789, 0.759),
    (ClassifierKind::Sgd, StopwordMode::Keep, 0.832, 0.808),
    (ClassifierKind::Gbc, StopwordMode::Keep, 0.792, 0.775),
    (ClassifierKind::Knn, StopwordMode::Keep, 0.781, 0.755),
    (ClassifierKind::Rf, StopwordMode::Keep, 0.816, 0.783),
];

pub fn reference_result(kind: ClassifierKind, mode: StopwordMode) -> Option<(f64, f64)> {
    REFERENCE_RESULTS
        .iter()
        .find(|(k, m, _, _)| *k == kind && *m == mode)
        .map(|(_, _, acc, f1)| (*acc, *f1))
}

/// Assignment of records to folds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub fold_of: Vec<usize>,
    pub seed: u64,
    /// Classes too small to reach every fold (reported, not an error).
    pub sparse_classes: Vec<usize>,
}

impl FoldAssignment {
    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &f in &self.fold_of {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Per class, members are shuffled with the seeded generator and dealt
/// round-robin into folds; the dealing offset carries over between classes
/// so overall fold sizes differ by at most one.
pub fn stratified_kfold(labels: &[usize], n_classes: usize, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(QcError::BadFoldCount(k));
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &label) in labels.iter().enumerate() {
        members[label].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0usize; labels.len()];
    let mut cursor = 0usize;
    let mut sparse_classes = Vec::new();
    for (class, rows) in members.iter_mut().enumerate() {
        if rows.is_empty() {
            continue;
        }
        if rows.len() < k {
            sparse_classes.push(class);
        }
        rows.shuffle(&mut rng);
        for &row in rows.iter() {
            fold_of[row] = cursor % k;
            cursor += 1;
        }
    }
    Ok(FoldAssignment {
        k,
        fold_of,
        seed,
        sparse_classes,
    })
}

/// C x C counts; rows are true classes, columns predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> Self {
        ConfusionMatrix {
            counts: vec![vec![0; n_classes]; n_classes],
        }
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        self.counts.iter().enumerate().map(|(i, row)| row[i]).sum()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub per_class: Vec<ClassMetrics>,
}

/// accuracy = trace/total; per-class P, R, F1 with 0/0 defined as 0;
/// macro F1 is the unweighted mean, weighted F1 weights by true support.
pub fn compute_metrics(confusion: &ConfusionMatrix) -> Result<MetricsReport> {
    let total = confusion.total();
    if total == 0 {
        return Err(QcError::Other("empty confusion matrix".into()));
    }
    let n_classes = confusion.counts.len();
    let mut per_class = Vec::with_capacity(n_classes);
    let mut macro_f1 = 0.0;
    let mut weighted_f1 = 0.0;
    for c in 0..n_classes {
        let tp = confusion.counts[c][c];
        let support: usize = confusion.counts[c].iter().sum();
        let predicted: usize = confusion.counts.iter().map(|row| row[c]).sum();
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, support);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        macro_f1 += f1;
        weighted_f1 += support as f64 * f1;
        per_class.push(ClassMetrics {
            precision,
            recall,
            f1,
            support,
        });
    }
    Ok(MetricsReport {
        accuracy: confusion.trace() as f64 / total as f64,
        macro_f1: macro_f1 / n_classes as f64,
        weighted_f1: weighted_f1 / total as f64,
        per_class,
    })
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub accuracy: f64,
    pub macro_f1: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossvalReport {
    pub classifier: String,
    pub granularity: Granularity,
    pub stopword_mode: StopwordMode,
    pub folds: usize,
    pub seed: u64,
    pub per_fold: Vec<FoldMetrics>,
    pub pooled: MetricsReport,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub mean_macro_f1: f64,
    pub std_macro_f1: f64,
    pub paper_reference: Option<PaperReference>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PaperReference {
    pub accuracy: f64,
    pub f1: f64,
}

pub struct CrossvalSpec<'a> {
    pub records: &'a [QuestionRecord],
    pub taxonomy: &'a Taxonomy,
    pub params: Hyperparams,
    pub feature_config: FeatureConfig,
    pub stops: &'a StopWordList,
    pub granularity: Granularity,
    pub k: usize,
    pub seed: u64,
}

/// Per fold: the vocabulary is fit on the training partition only, both
/// partitions are vectorized against it, the classifier is fit and the
/// validation partition scored into a pooled confusion matrix.
pub fn run_crossval(spec: &CrossvalSpec) -> Result<CrossvalReport> {
    let encoding = LabelEncoding::for_granularity(spec.taxonomy, spec.granularity);
    let labels: Vec<usize> = spec
        .records
        .iter()
        .map(|r| {
            let name = match spec.granularity {
                Granularity::Coarse => &r.coarse,
                Granularity::Fine => &r.fine,
            };
            encoding
                .id_of(name)
                .ok_or_else(|| QcError::Other(format!("label '{name}' not in encoding")))
        })
        .collect::<Result<_>>()?;
    let assignment = stratified_kfold(&labels, encoding.n_classes(), spec.k, spec.seed)?;
    let term_lists: Vec<Vec<String>> = spec
        .records
        .iter()
        .map(|r| terms_of_text(&r.text, &spec.feature_config, spec.stops))
        .collect();

    let mut pooled = ConfusionMatrix::new(encoding.n_classes());
    let mut per_fold = Vec::with_capacity(spec.k);
    for fold in 0..spec.k {
        let mut fold_confusion = ConfusionMatrix::new(encoding.n_classes());
        let train_ids: Vec<usize> = (0..spec.records.len())
            .filter(|&i| assignment.fold_of[i] != fold)
            .collect();
        let valid_ids: Vec<usize> = (0..spec.records.len())
            .filter(|&i| assignment.fold_of[i] == fold)
            .collect();
        let train_terms: Vec<Vec<String>> =
            train_ids.iter().map(|&i| term_lists[i].clone()).collect();
        let vocab = build_vocabulary(&train_terms, &spec.feature_config).map_err(|e| {
            QcError::FoldError {
                fold,
                source: Box::new(e),
            }
        })?;
        let rows = train_ids
            .iter()
            .map(|&i| vectorize_tfidf(&term_lists[i], &vocab))
            .collect();
        let train_labels = train_ids.iter().map(|&i| labels[i]).collect();
        let dataset = Dataset::new(rows, train_labels, vocab.len(), encoding.n_classes())?;
        let fold_seed = spec.seed.wrapping_add(fold as u64).wrapping_mul(0x5851_F42D_4C95_7F2D);
        let model = fit(&dataset, &spec.params, fold_seed).map_err(|e| QcError::FoldError {
            fold,
            source: Box::new(e),
        })?;
        for &i in &valid_ids {
            let row = vectorize_tfidf(&term_lists[i], &vocab);
            let predicted = model.predict(&row).map_err(|e| QcError::FoldError {
                fold,
                source: Box::new(e),
            })?;
            fold_confusion.record(labels[i], predicted);
        }
        let metrics = compute_metrics(&fold_confusion)?;
        per_fold.push(FoldMetrics {
            fold,
            accuracy: metrics.accuracy,
            macro_f1: metrics.macro_f1,
        });
        pooled.add(&fold_confusion);
    }
    let pooled_metrics = compute_metrics(&pooled)?;
    let (mean_accuracy, std_accuracy) = mean_std(per_fold.iter().map(|f| f.accuracy));
    let (mean_macro_f1, std_macro_f1) = mean_std(per_fold.iter().map(|f| f.macro_f1));
    let kind = spec.params.kind();
    let paper_reference = reference_result(kind, spec.feature_config.stopword_mode)
        .map(|(accuracy, f1)| PaperReference { accuracy, f1 });
    Ok(CrossvalReport {
        classifier: kind.to_string(),
        granularity: spec.granularity,
        stopword_mode: spec.feature_config.stopword_mode,
        folds: spec.k,
        seed: spec.seed,
        per_fold,
        pooled: pooled_metrics,
        mean_accuracy,
        std_accuracy,
        mean_macro_f1,
        std_macro_f1,
        paper_reference,
    })
}

fn mean_std(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let values: Vec<f64> = values.collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// One cell of the comparison grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonCell {
    pub classifier: String,
    pub stopword_mode: StopwordMode,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub paper_reference: Option<PaperReference>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub granularity: Granularity,
    pub folds: usize,
    pub seed: u64,
    pub cells: Vec<ComparisonCell>,
    /// Per classifier: (keep - remove) deltas for accuracy and F1.
    pub stopword_deltas: Vec<(String, f64, f64)>,
    pub reports: Vec<CrossvalReport>,
}

pub struct CompareSpec<'a> {
    pub records: &'a [QuestionRecord],
    pub taxonomy: &'a Taxonomy,
    pub classifiers: Vec<(ClassifierKind, Hyperparams)>,
    pub feature_config: FeatureConfig,
    pub stops: &'a StopWordList,
    pub granularity: Granularity,
    pub k: usize,
    pub seed: u64,
}

/// Runs every (classifier, stop-word mode) pair and assembles the
/// two-block comparison grid with reference values attached.
pub fn compare_setups(spec: &CompareSpec) -> Result<ComparisonReport> {
    let mut cells = Vec::new();
    let mut reports = Vec::new();
    for mode in [StopwordMode::Remove, StopwordMode::Keep] {
        for (kind, params) in &spec.classifiers {
            let feature_config = FeatureConfig {
                stopword_mode: mode,
                ..spec.feature_config.clone()
            };
            let report = run_crossval(&CrossvalSpec {
                records: spec.records,
                taxonomy: spec.taxonomy,
                params: params.clone(),
                feature_config,
                stops: spec.stops,
                granularity: spec.granularity,
                k: spec.k,
                seed: spec.seed,
            })?;
            cells.push(ComparisonCell {
                classifier: kind.to_string(),
                stopword_mode: mode,
                accuracy: report.pooled.accuracy,
                macro_f1: report.pooled.macro_f1,
                paper_reference: report.paper_reference.clone(),
            });
            reports.push(report);
        }
    }
    let mut stopword_deltas = Vec::new();
    for (kind, _) in &spec.classifiers {
        let name = kind.to_string();
        let removed = cells
            .iter()
            .find(|c| c.classifier == name && c.stopword_mode == StopwordMode::Remove);
        let kept = cells
            .iter()
            .find(|c| c.classifier == name && c.stopword_mode == StopwordMode::Keep);
        if let (Some(r), Some(k)) = (removed, kept) {
            stopword_deltas.push((name, k.accuracy - r.accuracy, k.macro_f1 - r.macro_f1));
        }
    }
    Ok(ComparisonReport {
        granularity: spec.granularity,
        folds: spec.k,
        seed: spec.seed,
        cells,
        stopword_deltas,
        reports,
    })
}

/// Renders a comparison report as a markdown table in the published
/// two-block layout, with reference values alongside.
pub fn render_comparison_markdown(report: &ComparisonReport) -> String {
    let mut out = String::new();
    let order = ["mlp", "svm", "nbc", "sgd", "gbc", "knn", "rf"];
    for (mode, title) in [
        (StopwordMode::Remove, "After Eliminating Stop Words"),
        (StopwordMode::Keep, "Without Eliminating Stop Words"),
    ] {
        out.push_str(&format!("### {title}\n\n"));
        out.push_str("| | MLP | SVM | NBC | SGD | GBC | KNN | RF |\n");
        out.push_str("|---|---|---|---|---|---|---|---|\n");
        for (row_name, value_of) in [
            (
                "Accuracy",
                Box::new(|c: &ComparisonCell| c.accuracy) as Box<dyn Fn(&ComparisonCell) -> f64>,
            ),
            ("F1 Score", Box::new(|c: &ComparisonCell| c.macro_f1)),
        ] {
            out.push_str(&format!("| {row_name} |"));
            for name in order {
                let cell = report
                    .cells
                    .iter()
                    .find(|c| c.classifier == name && c.stopword_mode == mode);
                match cell {
                    Some(c) => out.push_str(&format!(" {:.3} |", value_of(c))),
                    None => out.push_str(" - |"),
                }
            }
            out.push('\n');
        }
        out.push_str("| Reference accuracy |");
        for name in order {
            let kind: ClassifierKind = name.parse().unwrap();
            match reference_result(kind, mode) {
                Some((acc, _)) => out.push_str(&format!(" {acc:.3} |")),
                None => out.push_str(" - |"),
            }
        }
        out.push('\n');
        out.push_str("| Reference F1 |");
        for name in order {
            let kind: ClassifierKind = name.parse().unwrap();
            match reference_result(kind, mode) {
                Some((_, f1)) => out.push_str(&format!(" {f1:.3} |")),
                None => out.push_str(" - |"),
            }
        }
        out.push_str("\n\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::generate_synthetic_corpus;

    #[test]
    fn kfold_balanced_on_full_corpus() {
        let tax = Taxonomy::standard();
        let records = generate_synthetic_corpus(&tax, 7, 1.0);
        let encoding = LabelEncoding::for_granularity(&tax, Granularity::Coarse);
        let labels: Vec<usize> = records
            .iter()
            .map(|r| encoding.id_of(&r.coarse).unwrap())
            .collect();
        let assignment = stratified_kfold(&labels, 6, 10, 3).unwrap();
        let sizes = assignment.fold_sizes();
        assert_eq!(sizes, vec![350; 10]);
        // per-class imbalance <= 1
        for c in 0..6 {
            let mut per_fold = vec![0usize; 10];
            for (i, &label) in labels.iter().enumerate() {
                if label == c {
                    per_fold[assignment.fold_of[i]] += 1;
                }
            }
            let max = per_fold.iter().max().unwrap();
            let min = per_fold.iter().min().unwrap();
            assert!(max - min <= 1, "class {c}: {per_fold:?}");
        }
    }

    #[test]
    fn kfold_889_class_gets_88_or_89() {
        let labels: Vec<usize> = vec![0; 889];
        let assignment = stratified_kfold(&labels, 1, 10, 1).unwrap();
        let sizes = assignment.fold_sizes();
        for s in &sizes {
            assert!(*s == 88 || *s == 89, "{sizes:?}");
        }
    }

    #[test]
    fn kfold_rejects_k_below_two() {
        assert!(matches!(
            stratified_kfold(&[0, 1], 2, 1, 0),
            Err(QcError::BadFoldCount(1))
        ));
    }

    #[test]
    fn kfold_reports_sparse_classes() {
        let labels = vec![0, 0, 0, 0, 0, 1];
        let assignment = stratified_kfold(&labels, 2, 5, 0).unwrap();
        assert_eq!(assignment.sparse_classes, vec![1]);
    }

    #[test]
    fn metrics_diagonal_is_perfect() {
        let mut m = ConfusionMatrix::new(3);
        m.record(0, 0);
        m.record(1, 1);
        m.record(2, 2);
        let report = compute_metrics(&m).unwrap();
        assert!((report.accuracy - 1.0).abs() < 1e-12);
        assert!((report.macro_f1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn metrics_hand_computed() {
        let m = ConfusionMatrix {
            counts: vec![vec![5, 1], vec![2, 2]],
        };
        let report = compute_metrics(&m).unwrap();
        assert!((report.accuracy - 0.7).abs() < 1e-12);
        let p0 = 5.0 / 7.0;
        let r0 = 5.0 / 6.0;
        let f0 = 2.0 * p0 * r0 / (p0 + r0);
        let p1 = 2.0 / 3.0;
        let r1 = 0.5;
        let f1 = 2.0 * p1 * r1 / (p1 + r1);
        assert!((report.per_class[0].f1 - f0).abs() < 1e-12);
        assert!((report.per_class[1].f1 - f1).abs() < 1e-12);
        assert!((report.macro_f1 - (f0 + f1) / 2.0).abs() < 1e-12);
        assert!((report.per_class[0].f1 - 0.7692).abs() < 5e-4);
        assert!((report.per_class[1].f1 - 0.5714).abs() < 5e-4);
        assert!((report.macro_f1 - 0.6703).abs() < 5e-4);
    }

    #[test]
    fn metrics_zero_support_class_contributes_zero() {
        let m = ConfusionMatrix {
            counts: vec![vec![3, 0, 0], vec![0, 2, 0], vec![0, 0, 0]],
        };
        let report = compute_metrics(&m).unwrap();
        assert_eq!(report.per_class[2].f1, 0.0);
        assert!((report.macro_f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn accuracy_equals_weighted_recall() {
        let m = ConfusionMatrix {
            counts: vec![vec![5, 1, 0], vec![2, 2, 3], vec![1, 0, 6]],
        };
        let report = compute_metrics(&m).unwrap();
        let total: usize = m.total();
        let weighted_recall: f64 = report
            .per_class
            .iter()
            .map(|c| c.support as f64 / total as f64 * c.recall)
            .sum();
        assert!((report.accuracy - weighted_recall).abs() < 1e-12);
    }

    #[test]
    fn crossval_nbc_beats_majority_baseline() {
        let tax = Taxonomy::standard();
        let records = generate_synthetic_corpus(&tax, 5, 0.1);
        let stops = StopWordList::from_words(
            crate::corpus::FILLER_TOKENS.iter().map(|s| s.to_string()),
        );
        let report = run_crossval(&CrossvalSpec {
            records: &records,
            taxonomy: &tax,
            params: Hyperparams::default_for(ClassifierKind::Nbc),
            feature_config: FeatureConfig::default(),
            stops: &stops,
            granularity: Granularity::Coarse,
            k: 10,
            seed: 1,
        })
        .unwrap();
        assert!(
            report.pooled.accuracy > 0.254,
            "accuracy {}",
            report.pooled.accuracy
        );
    }

    #[test]
    fn crossval_deterministic() {
        let tax = Taxonomy::standard();
        let records = generate_synthetic_corpus(&tax, 5, 0.02);
        let stops = StopWordList::default();
        let spec = || CrossvalSpec {
            records: &records,
            taxonomy: &tax,
            params: Hyperparams::default_for(ClassifierKind::Nbc),
            feature_config: FeatureConfig::default(),
            stops: &stops,
            granularity: Granularity::Coarse,
            k: 5,
            seed: 9,
        };
        let a = run_crossval(&spec()).unwrap();
        let b = run_crossval(&spec()).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn crossval_surfaces_fold_index_for_knn_error() {
        let tax = Taxonomy::standard();
        let records = generate_synthetic_corpus(&tax, 5, 0.002);
        let stops = StopWordList::default();
        let mut params = Hyperparams::default_for(ClassifierKind::Knn);
        params.set("k", "100000").unwrap();
        let err = run_crossval(&CrossvalSpec {
            records: &records,
            taxonomy: &tax,
            params,
            feature_config: FeatureConfig::default(),
            stops: &stops,
            granularity: Granularity::Coarse,
            k: 5,
            seed: 2,
        })
        .unwrap_err();
        assert!(matches!(err, QcError::FoldError { fold: 0, .. }));
    }

    #[test]
    fn no_leakage_validation_terms_absent_from_fold_vocab() {
        // a term that appears in exactly one record cannot enter the
        // vocabulary of the fold where that record is held out
        let tax = Taxonomy::standard();
        let mut records = generate_synthetic_corpus(&tax, 5, 0.01);
        records[0].text = format!("{} uniquesentineltoken", records[0].text);
        let encoding = LabelEncoding::for_granularity(&tax, Granularity::Coarse);
        let labels: Vec<usize> = records
            .iter()
            .map(|r| encoding.id_of(&r.coarse).unwrap())
            .collect();
        let assignment = stratified_kfold(&labels, 6, 5, 3).unwrap();
        let holdout_fold = assignment.fold_of[0];
        let cfg = FeatureConfig::default();
        let stops = StopWordList::default();
        let train_terms: Vec<Vec<String>> = records
            .iter()
            .enumerate()
            .filter(|(i, _)| assignment.fold_of[*i] != holdout_fold)
            .map(|(_, r)| terms_of_text(&r.text, &cfg, &stops))
            .collect();
        let vocab = build_vocabulary(&train_terms, &cfg).unwrap();
        assert!(vocab.index_of("uniquesentineltoken").is_none());
    }

    #[test]
    fn comparison_grid_shape() {
        let report = ComparisonReport {
            granularity: Granularity::Coarse,
            folds: 10,
            seed: 0,
            cells: Vec::new(),
            stopword_deltas: Vec::new(),
            reports: Vec::new(),
        };
        let md = render_comparison_markdown(&report);
        assert!(md.contains("After Eliminating Stop Words"));
        assert!(md.contains("Without Eliminating Stop Words"));
        // reference values from the published table
        assert!(md.contains("0.832"));
        assert!(md.contains("0.810"));
    }
}
