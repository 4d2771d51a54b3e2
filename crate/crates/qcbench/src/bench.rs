//! Empirical complexity measurement: times a classifier phase while one
//! size axis scales, fits a log-log slope, and compares it against the
//! claimed asymptotic cost.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{generate_synthetic_corpus, StopWordList, Taxonomy};
use crate::error::{QcError, Result};
use crate::features::{build_vocabulary, terms_of_text, vectorize_tfidf, FeatureConfig};
use crate::model::{fit, ClassifierKind, Dataset, Granularity, Hyperparams, LabelEncoding};

/// Size axis being scanned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalingAxis {
    /// Training-set size.
    N,
    /// Vocabulary width.
    P,
    /// Ensemble size (random forest trees / boosting stages).
    Trees,
}

impl std::str::FromStr for ScalingAxis {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "n" => Ok(ScalingAxis::N),
            "p" => Ok(ScalingAxis::P),
            "trees" => Ok(ScalingAxis::Trees),
            other => Err(format!("unknown axis '{other}' (expected n, p or trees)")),
        }
    }
}

impl std::fmt::Display for ScalingAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ScalingAxis::N => "n",
            ScalingAxis::P => "p",
            ScalingAxis::Trees => "trees",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Train,
    Predict,
}

impl std::str::FromStr for Phase {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "train" => Ok(Phase::Train),
            "predict" => Ok(Phase::Predict),
            other => Err(format!("unknown phase '{other}'")),
        }
    }
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Phase::Train => "train",
            Phase::Predict => "predict",
        })
    }
}

/// What slope the scanned axis should show.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Expectation {
    /// A single exponent with symmetric tolerance.
    Slope { value: f64 },
    /// An exponent interval (mixed-order costs such as O(n^2 p + n^3)).
    Interval { lo: f64, hi: f64 },
}

/// One cell of the complexity table, specialized to a scanned axis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComplexityModel {
    pub classifier: ClassifierKind,
    pub phase: Phase,
    pub axis: ScalingAxis,
    /// Symbolic cost as published; "-" for cells the source leaves blank.
    pub formula: String,
    pub expected: Expectation,
    /// False when the source leaves the cell blank; the expectation is then
    /// the trivially expected behavior, not a published claim.
    pub claimed: bool,
    pub note: Option<String>,
}

/// Symbol legend: n = training samples (prediction-column n is the query
/// count, which the measurement protocol holds fixed), p = features,
/// n_trees = ensemble size, n_sv = support vectors, i = iterations,
/// h = hidden-layer width, k = hidden layers, m = average non-zero
/// attributes per sample.
pub fn complexity_model(
    classifier: ClassifierKind,
    phase: Phase,
    axis: ScalingAxis,
) -> Result<ComplexityModel> {
    use ClassifierKind::*;
    use ScalingAxis::*;
    let slope = |value: f64| Expectation::Slope { value };
    let (formula, expected, claimed, note): (&str, Expectation, bool, Option<&str>) =
        match (classifier, phase, axis) {
            (Mlp, Phase::Train, N) => ("O(n p h^k i)", slope(1.0), true, None),
            (Mlp, Phase::Train, P) => ("O(n p h^k i)", slope(1.0), true, None),
            (Mlp, Phase::Predict, N) => (
                "O(n p h^k)",
                slope(0.0),
                true,
                Some("prediction-column n is the query count, held fixed here"),
            ),
            (Mlp, Phase::Predict, P) => ("O(n p h^k)", slope(1.0), true, None),
            (Svm, Phase::Train, N) => ("O(n^2 p + n^3)", Expectation::Interval { lo: 1.7, hi: 3.3 }, true, None),
            (Svm, Phase::Train, P) => ("O(n^2 p + n^3)", slope(1.0), true, None),
            (Svm, Phase::Predict, N) => (
                "O(n_sv p)",
                Expectation::Interval { lo: 0.0, hi: 1.3 },
                true,
                Some("n_sv grows with training size at an unspecified rate"),
            ),
            (Svm, Phase::Predict, P) => ("O(n_sv p)", slope(1.0), true, None),
            (Nbc, Phase::Train, N) => ("O(n p)", slope(1.0), true, None),
            (Nbc, Phase::Train, P) => ("O(n p)", slope(1.0), true, None),
            (Nbc, Phase::Predict, N) => ("O(p)", slope(0.0), true, None),
            (Nbc, Phase::Predict, P) => ("O(p)", slope(1.0), true, None),
            (Sgd, Phase::Train, N) => ("O(i n m)", slope(1.0), true, None),
            (Sgd, Phase::Train, P) => ("O(i n m)", slope(1.0), true, None),
            (Sgd, Phase::Predict, N) => (
                "-",
                slope(0.0),
                false,
                Some("not claimed by paper; linear scoring is independent of training size"),
            ),
            (Sgd, Phase::Predict, P) => (
                "-",
                slope(1.0),
                false,
                Some("not claimed by paper; trivially linear in p"),
            ),
            (Gbc, Phase::Train, N) => ("O(n p n_trees)", slope(1.0), true, None),
            (Gbc, Phase::Train, P) => ("O(n p n_trees)", slope(1.0), true, None),
            (Gbc, Phase::Train, Trees) => ("O(n p n_trees)", slope(1.0), true, None),
            (Gbc, Phase::Predict, N) => ("O(p n_trees)", slope(0.0), true, None),
            (Gbc, Phase::Predict, P) => ("O(p n_trees)", slope(1.0), true, None),
            (Gbc, Phase::Predict, Trees) => ("O(p n_trees)", slope(1.0), true, None),
            (Knn, Phase::Train, N) => (
                "-",
                slope(1.0),
                false,
                Some("not claimed by paper; training is a data copy, linear in n"),
            ),
            (Knn, Phase::Train, P) => (
                "-",
                slope(0.0),
                false,
                Some("not claimed by paper; sparse data copy independent of vocabulary width"),
            ),
            (Knn, Phase::Predict, N) => ("O(n p)", slope(1.0), true, None),
            (Knn, Phase::Predict, P) => ("O(n p)", slope(1.0), true, None),
            (Rf, Phase::Train, N) => ("O(n^2 p n_trees)", slope(2.0), true, None),
            (Rf, Phase::Train, P) => ("O(n^2 p n_trees)", slope(1.0), true, None),
            (Rf, Phase::Train, Trees) => ("O(n^2 p n_trees)", slope(1.0), true, None),
            (Rf, Phase::Predict, N) => ("O(p n_trees)", slope(0.0), true, None),
            (Rf, Phase::Predict, P) => ("O(p n_trees)", slope(1.0), true, None),
            (Rf, Phase::Predict, Trees) => ("O(p n_trees)", slope(1.0), true, None),
            (kind, phase, ScalingAxis::Trees) => {
                return Err(QcError::Bench(format!(
                    "axis trees is not meaningful for {kind} {phase}"
                )))
            }
        };
    Ok(ComplexityModel {
        classifier,
        phase,
        axis,
        formula: formula.to_string(),
        expected,
        claimed,
        note: note.map(|s| s.to_string()),
    })
}

/// Measurement request.
#[derive(Debug, Clone)]
pub struct BenchSpec {
    pub classifier: ClassifierKind,
    pub phase: Phase,
    pub axis: ScalingAxis,
    /// Strictly increasing axis values.
    pub sizes: Vec<usize>,
    pub repeats: usize,
    pub seed: u64,
    /// Training-set size held fixed when the axis is p or trees.
    pub fixed_n: usize,
    /// Vocabulary width held fixed when the axis is n or trees.
    pub fixed_p: usize,
    /// Query rows timed in the predict phase.
    pub query_batch: usize,
}

impl BenchSpec {
    pub fn new(
        classifier: ClassifierKind,
        phase: Phase,
        axis: ScalingAxis,
        sizes: Vec<usize>,
        repeats: usize,
        seed: u64,
    ) -> Self {
        BenchSpec {
            classifier,
            phase,
            axis,
            sizes,
            repeats,
            seed,
            fixed_n: 500,
            fixed_p: 200,
            query_batch: 100,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingResult {
    pub classifier: ClassifierKind,
    pub phase: Phase,
    pub axis: ScalingAxis,
    pub sizes: Vec<usize>,
    pub median_times_s: Vec<f64>,
    pub fitted_slope: f64,
    pub r_squared: f64,
    pub seed: u64,
    /// Axis values dropped because the timer could not resolve them.
    pub dropped_sizes: Vec<usize>,
    /// Exact hyperparameters used, so the run is reproducible.
    pub pinned_params: serde_json::Value,
}

/// Iteration counts are pinned so the i symbol is controlled while an
/// axis scales; ensemble axes override the pinned count per size.
fn pinned_params(classifier: ClassifierKind, n: usize) -> Hyperparams {
    let mut params = Hyperparams::default_for(classifier);
    match classifier {
        ClassifierKind::Sgd => {
            params.set("epochs", "5").unwrap();
        }
        ClassifierKind::Mlp => {
            params.set("hidden_units", "16").unwrap();
            params.set("max_iter", "15").unwrap();
        }
        ClassifierKind::Gbc => {
            params.set("n_stages", "10").unwrap();
        }
        ClassifierKind::Rf => {
            params.set("n_trees", "20").unwrap();
        }
        ClassifierKind::Knn => {
            params.set("k", &13.min(n).to_string()).unwrap();
        }
        _ => {}
    }
    params
}

/// Times `work` enough times to exceed the timer floor and returns the
/// per-call median over `repeats` measurements.
fn timed_median(mut work: impl FnMut(), repeats: usize) -> f64 {
    const TARGET_S: f64 = 0.002;
    let start = Instant::now();
    work();
    let warmup = start.elapsed().as_secs_f64();
    let inner = if warmup > 0.0 && warmup < TARGET_S {
        ((TARGET_S / warmup).ceil() as usize).clamp(1, 2000)
    } else {
        1
    };
    let mut samples: Vec<f64> = (0..repeats.max(1))
        .map(|_| {
            let start = Instant::now();
            for _ in 0..inner {
                work();
            }
            start.elapsed().as_secs_f64() / inner as f64
        })
        .collect();
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    samples[samples.len() / 2]
}

struct BenchData {
    rows: Vec<crate::features::SparseVector>,
    labels: Vec<usize>,
    n_features: usize,
    n_classes: usize,
}

/// Synthesizes feature rows: corpus from the synthetic generator, shared
/// vocabulary truncated to `p` terms, deterministic row order.
fn bench_data(seed: u64, n_rows: usize, p: usize) -> Result<BenchData> {
    let taxonomy = Taxonomy::standard();
    let scale = (n_rows as f64 / 3500.0 * 1.15).max(0.002);
    let records = generate_synthetic_corpus(&taxonomy, seed, scale);
    if records.len() < n_rows {
        return Err(QcError::Bench(format!(
            "generator produced {} rows, need {n_rows}",
            records.len()
        )));
    }
    let cfg = FeatureConfig::default();
    let stops = StopWordList::default();
    let encoding = LabelEncoding::for_granularity(&taxonomy, Granularity::Coarse);
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0xB0B0));
    order.truncate(n_rows);
    let term_lists: Vec<Vec<String>> = order
        .iter()
        .map(|&i| terms_of_text(&records[i].text, &cfg, &stops))
        .collect();
    let vocab = build_vocabulary(&term_lists, &cfg)?.truncated(p);
    let rows = term_lists
        .iter()
        .map(|t| vectorize_tfidf(t, &vocab))
        .collect();
    let labels = order
        .iter()
        .map(|&i| encoding.id_of(&records[i].coarse).unwrap())
        .collect();
    Ok(BenchData {
        rows,
        labels,
        n_features: vocab.len(),
        n_classes: encoding.n_classes(),
    })
}

/// Times the requested phase at each axis value and fits the log-log slope.
/// Strictly serial: one measurement at a time on the calling thread.
pub fn run_scaling(spec: &BenchSpec) -> Result<ScalingResult> {
    if spec.sizes.len() < 3 {
        return Err(QcError::Bench(format!(
            "need at least 3 sizes, got {}",
            spec.sizes.len()
        )));
    }
    if !spec.sizes.windows(2).all(|w| w[0] < w[1]) {
        return Err(QcError::Bench("sizes must be strictly increasing".into()));
    }
    if spec.repeats == 0 {
        return Err(QcError::Bench("repeats must be at least 1".into()));
    }
    complexity_model(spec.classifier, spec.phase, spec.axis)?;

    let mut kept_sizes = Vec::new();
    let mut times = Vec::new();
    let mut dropped = Vec::new();
    let mut pinned = serde_json::Value::Null;

    match spec.axis {
        ScalingAxis::N => {
            let max_n = *spec.sizes.last().unwrap();
            let extra = if spec.phase == Phase::Predict {
                spec.query_batch
            } else {
                0
            };
            let data = bench_data(spec.seed, max_n + extra, spec.fixed_p)?;
            for &size in &spec.sizes {
                let params = pinned_params(spec.classifier, size);
                pinned = serde_json::to_value(&params)
                    .map_err(|e| QcError::Bench(e.to_string()))?;
                let train = Dataset::new(
                    data.rows[..size].to_vec(),
                    data.labels[..size].to_vec(),
                    data.n_features,
                    data.n_classes,
                )?;
                let time = match spec.phase {
                    Phase::Train => timed_median(
                        || {
                            fit(&train, &params, spec.seed).expect("bench training failed");
                        },
                        spec.repeats,
                    ),
                    Phase::Predict => {
                        let model = fit(&train, &params, spec.seed)?;
                        let queries = &data.rows[max_n..max_n + spec.query_batch];
                        timed_median(
                            || {
                                for q in queries {
                                    model.predict(q).expect("bench prediction failed");
                                }
                            },
                            spec.repeats,
                        )
                    }
                };
                record_time(size, time, &mut kept_sizes, &mut times, &mut dropped);
            }
        }
        ScalingAxis::P => {
            let extra = if spec.phase == Phase::Predict {
                spec.query_batch
            } else {
                0
            };
            let max_p = *spec.sizes.last().unwrap();
            let data = bench_data(spec.seed, spec.fixed_n + extra, max_p)?;
            let params = pinned_params(spec.classifier, spec.fixed_n);
            pinned = serde_json::to_value(&params).map_err(|e| QcError::Bench(e.to_string()))?;
            for &size in &spec.sizes {
                // keep only the first `size` features of every row
                let cut = |v: &crate::features::SparseVector| {
                    let pairs: Vec<(u32, f64)> = v
                        .iter()
                        .filter(|(i, _)| (*i as usize) < size)
                        .collect();
                    crate::features::SparseVector::from_pairs(pairs)
                };
                let rows: Vec<_> = data.rows[..spec.fixed_n].iter().map(cut).collect();
                let train = Dataset::new(
                    rows,
                    data.labels[..spec.fixed_n].to_vec(),
                    size,
                    data.n_classes,
                )?;
                let time = match spec.phase {
                    Phase::Train => timed_median(
                        || {
                            fit(&train, &params, spec.seed).expect("bench training failed");
                        },
                        spec.repeats,
                    ),
                    Phase::Predict => {
                        let model = fit(&train, &params, spec.seed)?;
                        let queries: Vec<_> = data.rows[spec.fixed_n..spec.fixed_n + spec.query_batch]
                            .iter()
                            .map(cut)
                            .collect();
                        timed_median(
                            || {
                                for q in &queries {
                                    model.predict(q).expect("bench prediction failed");
                                }
                            },
                            spec.repeats,
                        )
                    }
                };
                record_time(size, time, &mut kept_sizes, &mut times, &mut dropped);
            }
        }
        ScalingAxis::Trees => {
            let ensemble_key = match spec.classifier {
                ClassifierKind::Rf => "n_trees",
                ClassifierKind::Gbc => "n_stages",
                other => {
                    return Err(QcError::Bench(format!(
                        "axis trees is not meaningful for {other}"
                    )))
                }
            };
            let extra = if spec.phase == Phase::Predict {
                spec.query_batch
            } else {
                0
            };
            let data = bench_data(spec.seed, spec.fixed_n + extra, spec.fixed_p)?;
            let train = Dataset::new(
                data.rows[..spec.fixed_n].to_vec(),
                data.labels[..spec.fixed_n].to_vec(),
                data.n_features,
                data.n_classes,
            )?;
            for &size in &spec.sizes {
                let mut params = pinned_params(spec.classifier, spec.fixed_n);
                params.set(ensemble_key, &size.to_string())?;
                pinned = serde_json::to_value(&params)
                    .map_err(|e| QcError::Bench(e.to_string()))?;
                let time = match spec.phase {
                    Phase::Train => timed_median(
                        || {
                            fit(&train, &params, spec.seed).expect("bench training failed");
                        },
                        spec.repeats,
                    ),
                    Phase::Predict => {
                        let model = fit(&train, &params, spec.seed)?;
                        let queries = &data.rows[spec.fixed_n..spec.fixed_n + spec.query_batch];
                        timed_median(
                            || {
                                for q in queries {
                                    model.predict(q).expect("bench prediction failed");
                                }
                            },
                            spec.repeats,
                        )
                    }
                };
                record_time(size, time, &mut kept_sizes, &mut times, &mut dropped);
            }
        }
    }

    if kept_sizes.len() < 3 {
        return Err(QcError::Bench(format!(
            "only {} sizes produced measurable times (dropped: {dropped:?})",
            kept_sizes.len()
        )));
    }
    let (slope, r_squared) = loglog_fit(&kept_sizes, &times);
    Ok(ScalingResult {
        classifier: spec.classifier,
        phase: spec.phase,
        axis: spec.axis,
        sizes: kept_sizes,
        median_times_s: times,
        fitted_slope: slope,
        r_squared,
        seed: spec.seed,
        dropped_sizes: dropped,
        pinned_params: pinned,
    })
}

fn record_time(
    size: usize,
    time: f64,
    sizes: &mut Vec<usize>,
    times: &mut Vec<f64>,
    dropped: &mut Vec<usize>,
) {
    if time > 0.0 {
        sizes.push(size);
        times.push(time);
    } else {
        dropped.push(size);
    }
}

/// Least-squares slope and r² of log(time) against log(size).
pub fn loglog_fit(sizes: &[usize], times: &[f64]) -> (f64, f64) {
    let xs: Vec<f64> = sizes.iter().map(|&s| (s as f64).ln()).collect();
    let ys: Vec<f64> = times.iter().map(|&t| t.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return (0.0, 0.0);
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r_squared)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AsymptoticsVerdict {
    pub classifier: ClassifierKind,
    pub phase: Phase,
    pub axis: ScalingAxis,
    pub formula: String,
    pub claimed: bool,
    pub expected: Expectation,
    pub fitted_slope: f64,
    pub r_squared: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub detail: String,
}

pub const DEFAULT_SLOPE_TOLERANCE: f64 = 0.35;
pub const MIN_R_SQUARED: f64 = 0.9;

/// Compares a measured slope against the claimed exponent. Flat
/// expectations (exponent 0) skip the r² requirement: a constant-time
/// phase produces noise-dominated, fit-free timings by design.
pub fn check_asymptotics(
    result: &ScalingResult,
    model: &ComplexityModel,
    tolerance: f64,
) -> Result<AsymptoticsVerdict> {
    if result.classifier != model.classifier
        || result.phase != model.phase
        || result.axis != model.axis
    {
        return Err(QcError::Bench(format!(
            "result {}/{}/{} does not match model {}/{}/{}",
            result.classifier, result.phase, result.axis,
            model.classifier, model.phase, model.axis
        )));
    }
    let slope = result.fitted_slope;
    let (slope_ok, flat, detail) = match model.expected {
        Expectation::Slope { value } => {
            let ok = (slope - value).abs() <= tolerance;
            (
                ok,
                value.abs() < 1e-9,
                format!("|{slope:.3} - {value}| vs tolerance {tolerance}"),
            )
        }
        Expectation::Interval { lo, hi } => (
            slope >= lo && slope <= hi,
            lo <= 0.0,
            format!("{slope:.3} vs interval [{lo}, {hi}]"),
        ),
    };
    let r2_ok = flat || result.r_squared >= MIN_R_SQUARED;
    Ok(AsymptoticsVerdict {
        classifier: result.classifier,
        phase: result.phase,
        axis: result.axis,
        formula: model.formula.clone(),
        claimed: model.claimed,
        expected: model.expected,
        fitted_slope: slope,
        r_squared: result.r_squared,
        tolerance,
        pass: slope_ok && r2_ok,
        detail,
    })
}

/// Full benchmark report: the measurement plus its verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchReport {
    pub result: ScalingResult,
    pub verdict: AsymptoticsVerdict,
}

pub fn run_bench(spec: &BenchSpec) -> Result<BenchReport> {
    let model = complexity_model(spec.classifier, spec.phase, spec.axis)?;
    let result = run_scaling(spec)?;
    let verdict = check_asymptotics(&result, &model, DEFAULT_SLOPE_TOLERANCE)?;
    Ok(BenchReport { result, verdict })
}
