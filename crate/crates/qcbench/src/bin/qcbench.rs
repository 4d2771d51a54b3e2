//! Command-line entry point: corpus generation, training, prediction,
//! cross-validation, classifier comparison, complexity benchmarking and
//! report rendering.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/model error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qcbench::bench::{run_bench, BenchSpec, Phase, ScalingAxis};
use qcbench::corpus::{
    corpus_stats, generate_synthetic_corpus, load_corpus, load_stopwords, save_corpus,
    write_stopword_file, StopWordList, Taxonomy, FILLER_TOKENS,
};
use qcbench::error::QcError;
use qcbench::eval::{
    compare_setups, render_comparison_markdown, run_crossval, CompareSpec, CrossvalSpec,
};
use qcbench::features::{FeatureConfig, StopwordMode};
use qcbench::model::{
    load_model, save_model, train_pipeline, ClassifierKind, Granularity, Hyperparams,
};

#[derive(Parser)]
#[command(
    name = "qcbench",
    version,
    about = "Question-classification benchmark toolkit"
)]
struct Cli {
    /// Worker-count cap; 1 forces fully serial runs (the implementation is
    /// serial either way, so any value above 1 is accepted and ignored).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the deterministic synthetic corpus.
    Generate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Corpus size as a fraction of the 3500-question reference.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Also write the stop-word list here.
        #[arg(long)]
        stopwords_out: Option<PathBuf>,
    },
    /// Train one classifier and save a model artifact.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        classifier: ClassifierKind,
        #[command(flatten)]
        setup: SetupArgs,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        model_out: PathBuf,
        /// Hyperparameter override, e.g. --set k=13 (repeatable).
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Classify text with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// Single question to classify.
        #[arg(long, conflicts_with = "input")]
        text: Option<String>,
        /// JSONL file with one {"text": ...} object per line.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Output path; defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stratified k-fold cross-validation of one classifier.
    Crossval {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        classifier: ClassifierKind,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[command(flatten)]
        setup: SetupArgs,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// All seven classifiers under both stop-word modes.
    Compare {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long, value_parser = clap::value_parser!(Granularity), default_value = "coarse")]
        granularity: Granularity,
        #[arg(long)]
        stoplist: Option<PathBuf>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time one classifier phase across a size axis and fit the slope.
    Bench {
        #[arg(long)]
        classifier: ClassifierKind,
        #[arg(long)]
        phase: Phase,
        #[arg(long)]
        axis: ScalingAxis,
        /// Comma-separated increasing sizes, e.g. 500,1000,2000,4000.
        #[arg(long)]
        sizes: String,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Training-set size held fixed when the axis is p or trees.
        #[arg(long, default_value_t = 500)]
        fixed_n: usize,
        /// Vocabulary width held fixed when the axis is n or trees.
        #[arg(long, default_value_t = 200)]
        fixed_p: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render saved JSON reports as markdown.
    Report {
        #[arg(long, num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = "markdown")]
        format: String,
    },
}

#[derive(Args)]
struct SetupArgs {
    #[arg(long, value_parser = clap::value_parser!(Granularity), default_value = "coarse")]
    granularity: Granularity,
    /// keep | remove
    #[arg(long, value_parser = clap::value_parser!(StopwordMode), default_value = "keep")]
    stopwords: StopwordMode,
    /// Stop-word list file; defaults to the built-in list.
    #[arg(long)]
    stoplist: Option<PathBuf>,
}

fn main() -> ExitCode {
    // usage errors exit 1; data/model errors exit 2
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are not errors
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> qcbench::Result<()> {
    let _ = cli.threads;
    match cli.command {
        Command::Generate {
            out,
            seed,
            scale,
            stopwords_out,
        } => {
            if scale.is_nan() || scale <= 0.0 {
                return Err(QcError::Other(format!("scale must be positive, got {scale}")));
            }
            let taxonomy = Taxonomy::standard();
            let records = generate_synthetic_corpus(&taxonomy, seed, scale);
            save_corpus(&out, &records)?;
            if let Some(path) = stopwords_out {
                write_stopword_file(&path)?;
            }
            let stats = corpus_stats(&records);
            eprintln!(
                "wrote {} records ({} coarse / {} fine classes) to {}",
                records.len(),
                stats.per_coarse.len(),
                stats.per_fine.len(),
                out.display()
            );
            Ok(())
        }
        Command::Train {
            corpus,
            classifier,
            setup,
            seed,
            model_out,
            overrides,
        } => {
            let taxonomy = Taxonomy::standard();
            let records = load_corpus(&corpus, &taxonomy)?;
            let params = build_params(classifier, &overrides)?;
            let stops = resolve_stoplist(setup.stoplist.as_deref())?;
            let feature_config = FeatureConfig {
                stopword_mode: setup.stopwords,
                ..FeatureConfig::default()
            };
            let pipeline = train_pipeline(
                &records,
                &taxonomy,
                &params,
                &feature_config,
                &stops,
                setup.granularity,
                seed,
            )?;
            save_model(&pipeline, &model_out)?;
            eprintln!(
                "trained {classifier} on {} records, saved to {}",
                records.len(),
                model_out.display()
            );
            Ok(())
        }
        Command::Predict {
            model,
            text,
            input,
            out,
        } => {
            let pipeline = load_model(&model)?;
            let mut lines = Vec::new();
            match (text, input) {
                (Some(text), None) => {
                    let label = pipeline.predict_text(&text)?;
                    lines.push(serde_json::json!({ "text": text, "label": label }).to_string());
                }
                (None, Some(path)) => {
                    let body =
                        fs::read_to_string(&path).map_err(|e| QcError::io(&path, e))?;
                    for (i, line) in body.lines().enumerate() {
                        if line.trim().is_empty() {
                            continue;
                        }
                        let value: serde_json::Value =
                            serde_json::from_str(line).map_err(|e| QcError::MalformedLine {
                                line: i + 1,
                                msg: e.to_string(),
                            })?;
                        let text = value
                            .get("text")
                            .and_then(|t| t.as_str())
                            .ok_or(QcError::MalformedLine {
                                line: i + 1,
                                msg: "missing \"text\" field".into(),
                            })?;
                        let label = pipeline.predict_text(text)?;
                        lines.push(
                            serde_json::json!({ "text": text, "label": label }).to_string(),
                        );
                    }
                }
                _ => {
                    return Err(QcError::Other(
                        "exactly one of --text or --input is required".into(),
                    ))
                }
            }
            emit(out.as_deref(), &(lines.join("\n") + "\n"))
        }
        Command::Crossval {
            corpus,
            classifier,
            folds,
            setup,
            seed,
            overrides,
            out,
        } => {
            let taxonomy = Taxonomy::standard();
            let records = load_corpus(&corpus, &taxonomy)?;
            let params = build_params(classifier, &overrides)?;
            let stops = resolve_stoplist(setup.stoplist.as_deref())?;
            let feature_config = FeatureConfig {
                stopword_mode: setup.stopwords,
                ..FeatureConfig::default()
            };
            let report = run_crossval(&CrossvalSpec {
                records: &records,
                taxonomy: &taxonomy,
                params,
                feature_config,
                stops: &stops,
                granularity: setup.granularity,
                k: folds,
                seed,
            })?;
            write_json(&out, &report)?;
            eprintln!(
                "{classifier}: pooled accuracy {:.4}, macro F1 {:.4} ({folds} folds) -> {}",
                report.pooled.accuracy,
                report.pooled.macro_f1,
                out.display()
            );
            Ok(())
        }
        Command::Compare {
            corpus,
            folds,
            granularity,
            stoplist,
            seed,
            out,
        } => {
            let taxonomy = Taxonomy::standard();
            let records = load_corpus(&corpus, &taxonomy)?;
            let stops = resolve_stoplist(stoplist.as_deref())?;
            let classifiers = ClassifierKind::ALL
                .iter()
                .map(|&k| (k, Hyperparams::default_for(k)))
                .collect();
            let report = compare_setups(&CompareSpec {
                records: &records,
                taxonomy: &taxonomy,
                classifiers,
                feature_config: FeatureConfig::default(),
                stops: &stops,
                granularity,
                k: folds,
                seed,
            })?;
            write_json(&out, &report)?;
            eprint!("{}", render_comparison_markdown(&report));
            Ok(())
        }
        Command::Bench {
            classifier,
            phase,
            axis,
            sizes,
            repeats,
            seed,
            fixed_n,
            fixed_p,
            out,
        } => {
            let sizes = sizes
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<usize>()
                        .map_err(|_| QcError::Bench(format!("bad size '{s}'")))
                })
                .collect::<qcbench::Result<Vec<usize>>>()?;
            let mut spec = BenchSpec::new(classifier, phase, axis, sizes, repeats, seed);
            spec.fixed_n = fixed_n;
            spec.fixed_p = fixed_p;
            let report = run_bench(&spec)?;
            write_json(&out, &report)?;
            eprintln!(
                "{classifier} {phase} vs {axis}: slope {:.3} (r2 {:.3}) expected {:?} -> {}",
                report.result.fitted_slope,
                report.result.r_squared,
                report.verdict.expected,
                if report.verdict.pass { "pass" } else { "FAIL" }
            );
            Ok(())
        }
        Command::Report { inputs, format } => {
            if format != "markdown" {
                return Err(QcError::Other(format!("unsupported format '{format}'")));
            }
            let mut out = String::new();
            for path in &inputs {
                let body = fs::read_to_string(path).map_err(|e| QcError::io(path, e))?;
                out.push_str(&render_report(path, &body)?);
                out.push('\n');
            }
            print!("{out}");
            Ok(())
        }
    }
}

/// Renders one saved JSON report (crossval, compare or bench) as markdown.
fn render_report(path: &Path, body: &str) -> qcbench::Result<String> {
    let fail = |msg: &str| QcError::Other(format!("{}: {msg}", path.display()));
    if let Ok(report) = serde_json::from_str::<qcbench::eval::ComparisonReport>(body) {
        return Ok(format!(
            "## Comparison ({} folds, seed {})\n\n{}",
            report.folds,
            report.seed,
            render_comparison_markdown(&report)
        ));
    }
    if let Ok(report) = serde_json::from_str::<qcbench::eval::CrossvalReport>(body) {
        let mut out = format!(
            "## Cross-validation: {} ({} folds, seed {})\n\n",
            report.classifier, report.folds, report.seed
        );
        out.push_str("| fold | accuracy | macro F1 |\n|---|---|---|\n");
        for f in &report.per_fold {
            out.push_str(&format!("| {} | {:.4} | {:.4} |\n", f.fold, f.accuracy, f.macro_f1));
        }
        out.push_str(&format!(
            "\nPooled: accuracy {:.4}, macro F1 {:.4}, weighted F1 {:.4}\n",
            report.pooled.accuracy, report.pooled.macro_f1, report.pooled.weighted_f1
        ));
        out.push_str(&format!(
            "Per-fold mean accuracy {:.4} (std {:.4}), mean macro F1 {:.4} (std {:.4})\n",
            report.mean_accuracy, report.std_accuracy, report.mean_macro_f1, report.std_macro_f1
        ));
        if let Some(r) = &report.paper_reference {
            out.push_str(&format!(
                "Reference: accuracy {:.3}, F1 {:.3}\n",
                r.accuracy, r.f1
            ));
        }
        return Ok(out);
    }
    if let Ok(report) = serde_json::from_str::<qcbench::bench::BenchReport>(body) {
        let mut out = format!(
            "## Benchmark: {} {} vs {}\n\n| {} | median time (s) |\n|---|---|\n",
            report.result.classifier, report.result.phase, report.result.axis, report.result.axis
        );
        for (s, t) in report.result.sizes.iter().zip(&report.result.median_times_s) {
            out.push_str(&format!("| {s} | {t:.6} |\n"));
        }
        out.push_str(&format!(
            "\nSlope {:.3}, r2 {:.3}; claimed cost {} -> {}\n",
            report.result.fitted_slope,
            report.result.r_squared,
            report.verdict.formula,
            if report.verdict.pass { "pass" } else { "FAIL" }
        ));
        return Ok(out);
    }
    Err(fail("not a recognized report file"))
}

fn build_params(kind: ClassifierKind, overrides: &[String]) -> qcbench::Result<Hyperparams> {
    let mut params = Hyperparams::default_for(kind);
    for item in overrides {
        let (key, value) = item.split_once('=').ok_or_else(|| {
            QcError::InvalidHyperparameter(format!("'{item}' is not KEY=VALUE"))
        })?;
        params.set(key.trim(), value.trim())?;
    }
    Ok(params)
}

fn resolve_stoplist(path: Option<&Path>) -> qcbench::Result<StopWordList> {
    match path {
        Some(p) => load_stopwords(p),
        None => Ok(StopWordList::from_words(
            FILLER_TOKENS.iter().map(|s| s.to_string()),
        )),
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> qcbench::Result<()> {
    let body = serde_json::to_string_pretty(value)
        .map_err(|e| QcError::Other(format!("serialize report: {e}")))?;
    fs::write(path, body).map_err(|e| QcError::io(path, e))
}

fn emit(path: Option<&Path>, body: &str) -> qcbench::Result<()> {
    match path {
        Some(p) => fs::write(p, body).map_err(|e| QcError::io(p, e)),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}
