//! Question data model: the two-layer class taxonomy, labeled question
//! records, stop-word lists, and a deterministic synthetic corpus generator
//! that reproduces the reference class distribution.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QcError, Result};

/// Reference class distribution: (coarse, [(fine, count)]).
///
/// Fine names that repeat across coarse parents are stored qualified by the
/// parent (e.g. "ENTITY/OTHER" vs "NUMERIC/OTHER") so the 50 fine labels are
/// unique.
const CLASS_TABLE: &[(&str, &[(&str, u32)])] = &[
    (
        "ENTITY",
        &[
            ("SUBSTANCE", 20),
            ("SYMBOL", 11),
            ("CURRENCY", 24),
            ("TERM", 15),
            ("WORD", 20),
            ("LANGUAGE", 30),
            ("COLOR", 15),
            ("RELIGION", 15),
            ("SPORT", 10),
            ("BODY", 10),
            ("FOOD", 11),
            ("TECHNIQUE", 10),
            ("PRODUCT", 10),
            ("DISEASE", 10),
            ("ENTITY/OTHER", 22),
            ("LETTER", 10),
            ("VEHICLE", 11),
            ("PLANT", 12),
            ("CREATIVE", 216),
            ("INSTRUMENT", 10),
            ("ANIMAL", 10),
            ("EVENT", 10),
        ],
    ),
    (
        "NUMERIC",
        &[
            ("COUNT", 213),
            ("DISTANCE", 13),
            ("CODE", 10),
            ("TEMPERATURE", 13),
            ("WEIGHT", 20),
            ("MONEY", 10),
            ("PERCENT", 27),
            ("PERIOD", 33),
            ("NUMERIC/OTHER", 24),
            ("DATE", 452),
            ("SPEED", 10),
            ("SIZE", 54),
            ("ORDER", 10),
        ],
    ),
    (
        "HUMAN",
        &[
            ("INDIVIDUAL", 618),
            ("GROUP", 18),
            ("HUMAN/DESCRIPTION", 23),
            ("TITLE", 10),
        ],
    ),
    (
        "LOCATION",
        &[
            ("MOUNTAIN", 32),
            ("COUNTRY", 125),
            ("STATE", 98),
            ("LOCATION/OTHER", 121),
            ("CITY", 274),
        ],
    ),
    (
        "DESCRIPTION",
        &[
            ("DEFINITION", 153),
            ("REASON", 44),
            ("MANNER", 22),
            ("DESCRIPTION/DESCRIPTION", 29),
        ],
    ),
    (
        "ABBREVIATION",
        &[("ABBREVIATION", 519), ("EXPRESSION", 13)],
    ),
];

/// The 6-coarse / 50-fine question class system.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Taxonomy {
    coarse_classes: Vec<String>,
    fine_classes: Vec<String>,
    fine_to_coarse: HashMap<String, String>,
}

impl Taxonomy {
    /// The standard two-layer taxonomy with its reference per-class counts.
    pub fn standard() -> Self {
        let mut coarse_classes = Vec::new();
        let mut fine_classes = Vec::new();
        let mut fine_to_coarse = HashMap::new();
        for (coarse, fines) in CLASS_TABLE {
            coarse_classes.push(coarse.to_string());
            for (fine, _) in *fines {
                fine_classes.push(fine.to_string());
                fine_to_coarse.insert(fine.to_string(), coarse.to_string());
            }
        }
        debug_assert_eq!(coarse_classes.len(), 6);
        debug_assert_eq!(fine_classes.len(), 50);
        Taxonomy {
            coarse_classes,
            fine_classes,
            fine_to_coarse,
        }
    }

    pub fn coarse_classes(&self) -> &[String] {
        &self.coarse_classes
    }

    pub fn fine_classes(&self) -> &[String] {
        &self.fine_classes
    }

    pub fn coarse_of(&self, fine: &str) -> Option<&str> {
        self.fine_to_coarse.get(fine).map(|s| s.as_str())
    }

    pub fn is_coarse(&self, name: &str) -> bool {
        self.coarse_classes.iter().any(|c| c == name)
    }

    pub fn is_fine(&self, name: &str) -> bool {
        self.fine_to_coarse.contains_key(name)
    }

    /// Reference count for a fine class, as in the published distribution.
    pub fn reference_count(&self, fine: &str) -> Option<u32> {
        for (_, fines) in CLASS_TABLE {
            for (name, count) in *fines {
                if *name == fine {
                    return Some(*count);
                }
            }
        }
        None
    }
}

/// A labeled question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub id: String,
    pub text: String,
    pub coarse: String,
    pub fine: String,
}

/// Exact-match stop-word set.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StopWordList {
    words: BTreeSet<String>,
}

impl StopWordList {
    pub fn from_words<I: IntoIterator<Item = String>>(words: I) -> Self {
        let words = words
            .into_iter()
            .map(|w| w.trim().to_string())
            .filter(|w| !w.is_empty())
            .collect();
        StopWordList { words }
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(|s| s.as_str())
    }
}

/// Per-class record counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusStats {
    pub total: usize,
    pub per_coarse: HashMap<String, usize>,
    pub per_fine: HashMap<String, usize>,
}

/// Loads a JSON Lines corpus, validating every record against the taxonomy.
pub fn load_corpus(path: &Path, taxonomy: &Taxonomy) -> Result<Vec<QuestionRecord>> {
    let file = fs::File::open(path).map_err(|e| QcError::io(path, e))?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    let mut seen_ids = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| QcError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: QuestionRecord =
            serde_json::from_str(&line).map_err(|e| QcError::MalformedLine {
                line: lineno,
                msg: e.to_string(),
            })?;
        validate_record(&record, taxonomy, lineno)?;
        if !seen_ids.insert(record.id.clone()) {
            return Err(QcError::DuplicateId {
                id: record.id,
                line: lineno,
            });
        }
        records.push(record);
    }
    Ok(records)
}

fn validate_record(record: &QuestionRecord, taxonomy: &Taxonomy, line: usize) -> Result<()> {
    if !taxonomy.is_coarse(&record.coarse) {
        return Err(QcError::UnknownLabel {
            layer: "coarse",
            label: record.coarse.clone(),
            line,
        });
    }
    if !taxonomy.is_fine(&record.fine) {
        return Err(QcError::UnknownLabel {
            layer: "fine",
            label: record.fine.clone(),
            line,
        });
    }
    if taxonomy.coarse_of(&record.fine) != Some(record.coarse.as_str()) {
        return Err(QcError::LabelMismatch {
            fine: record.fine.clone(),
            coarse: record.coarse.clone(),
            line,
        });
    }
    if record.text.trim().is_empty() {
        return Err(QcError::EmptyText {
            id: record.id.clone(),
        });
    }
    Ok(())
}

/// Writes records as JSON Lines. `load_corpus` of the output reproduces the
/// input exactly.
pub fn save_corpus(path: &Path, records: &[QuestionRecord]) -> Result<()> {
    let mut out = String::new();
    for record in records {
        let line = serde_json::to_string(record)
            .map_err(|e| QcError::Other(format!("serialize record: {e}")))?;
        out.push_str(&line);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| QcError::io(path, e))
}

/// Exact per-class counts over a validated record sequence.
pub fn corpus_stats(records: &[QuestionRecord]) -> CorpusStats {
    let mut per_coarse = HashMap::new();
    let mut per_fine = HashMap::new();
    for record in records {
        *per_coarse.entry(record.coarse.clone()).or_insert(0) += 1;
        *per_fine.entry(record.fine.clone()).or_insert(0) += 1;
    }
    CorpusStats {
        total: records.len(),
        per_coarse,
        per_fine,
    }
}

/// Cross-class filler tokens shared by all generated questions. They behave
/// like stop words and double as the companion stop-word list.
pub const FILLER_TOKENS: &[&str] = &[
    "ki", "keno", "kothay", "ebong", "theke", "holo", "chilo", "kore", "ache", "er", "ta", "na",
    "কী", "এবং", "থেকে", "হলো",
];

/// Deterministic synthetic corpus matching the reference class distribution.
///
/// Per-fine-class counts are `round(scale * reference_count)` with a minimum
/// of 1. Each text mixes class-discriminative tokens with shared filler
/// tokens so TF-IDF features carry signal and the stop-word experiment is
/// meaningful.
pub fn generate_synthetic_corpus(
    taxonomy: &Taxonomy,
    seed: u64,
    scale: f64,
) -> Vec<QuestionRecord> {
    assert!(scale > 0.0, "scale must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    let mut next_id = 1usize;
    for fine in taxonomy.fine_classes() {
        let coarse = taxonomy.coarse_of(fine).expect("fine in taxonomy");
        let reference = taxonomy.reference_count(fine).expect("counted fine class");
        let count = ((scale * reference as f64).round() as usize).max(1);
        let class_tokens = class_token_pool(fine);
        for _ in 0..count {
            let text = render_question(&class_tokens, &mut rng);
            records.push(QuestionRecord {
                id: format!("q{next_id:05}"),
                text,
                coarse: coarse.to_string(),
                fine: fine.to_string(),
            });
            next_id += 1;
        }
    }
    records
}

fn class_token_pool(fine: &str) -> Vec<String> {
    let slug: String = fine
        .chars()
        .map(|c| if c == '/' { '_' } else { c.to_ascii_lowercase() })
        .collect();
    ["", "_naam", "_shomoy", "_jinish", "_dhoron"]
        .iter()
        .map(|suffix| format!("{slug}{suffix}"))
        .collect()
}

fn render_question(class_tokens: &[String], rng: &mut ChaCha8Rng) -> String {
    let n_class = rng.gen_range(2..=3);
    let n_filler = rng.gen_range(2..=4);
    let mut tokens: Vec<&str> = Vec::with_capacity(n_class + n_filler);
    for _ in 0..n_class {
        tokens.push(class_tokens.choose(rng).expect("nonempty pool"));
    }
    for _ in 0..n_filler {
        tokens.push(FILLER_TOKENS.choose(rng).expect("nonempty fillers"));
    }
    tokens.shuffle(rng);
    let mut text = String::new();
    for (i, token) in tokens.iter().enumerate() {
        if i > 0 {
            text.push(' ');
        }
        let _ = write!(text, "{token}");
    }
    text.push('?');
    text
}

/// Writes the generator's filler tokens as a stop-word file.
pub fn write_stopword_file(path: &Path) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| QcError::io(path, e))?;
    let mut body = String::from("# filler tokens emitted by the synthetic generator\n");
    for token in FILLER_TOKENS {
        body.push_str(token);
        body.push('\n');
    }
    file.write_all(body.as_bytes())
        .map_err(|e| QcError::io(path, e))
}

/// Loads a stop-word file: one token per line, '#' starts a comment line.
pub fn load_stopwords(path: &Path) -> Result<StopWordList> {
    let bytes = fs::read(path).map_err(|e| QcError::io(path, e))?;
    let text = String::from_utf8(bytes)
        .map_err(|e| QcError::Other(format!("{}: invalid UTF-8: {e}", path.display())))?;
    let words = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string);
    Ok(StopWordList::from_words(words))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taxonomy_shape() {
        let tax = Taxonomy::standard();
        assert_eq!(tax.coarse_classes().len(), 6);
        assert_eq!(tax.fine_classes().len(), 50);
        let unique: HashSet<_> = tax.fine_classes().iter().collect();
        assert_eq!(unique.len(), 50);
        for fine in tax.fine_classes() {
            assert!(tax.coarse_of(fine).is_some());
        }
        assert_eq!(tax.coarse_of("CITY"), Some("LOCATION"));
        assert_eq!(tax.coarse_of("DATE"), Some("NUMERIC"));
    }

    #[test]
    fn reference_counts_sum_per_coarse() {
        let expected = [
            ("ENTITY", 512u32),
            ("NUMERIC", 889),
            ("HUMAN", 669),
            ("LOCATION", 650),
            ("DESCRIPTION", 248),
            ("ABBREVIATION", 532),
        ];
        let tax = Taxonomy::standard();
        let mut grand_total = 0;
        for (coarse, want) in expected {
            let sum: u32 = tax
                .fine_classes()
                .iter()
                .filter(|f| tax.coarse_of(f) == Some(coarse))
                .map(|f| tax.reference_count(f).unwrap())
                .sum();
            assert_eq!(sum, want, "coarse {coarse}");
            grand_total += sum;
        }
        assert_eq!(grand_total, 3500);
    }

    #[test]
    fn load_valid_line() {
        let tax = Taxonomy::standard();
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(
            file,
            r#"{{"id":"q1","text":"when did it happen","coarse":"NUMERIC","fine":"DATE"}}"#
        )
        .unwrap();
        let records = load_corpus(file.path(), &tax).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].fine, "DATE");
    }

    #[test]
    fn load_empty_file() {
        let tax = Taxonomy::standard();
        let file = tempfile::NamedTempFile::new().unwrap();
        assert!(load_corpus(file.path(), &tax).unwrap().is_empty());
    }

    #[test]
    fn load_rejects_fine_coarse_mismatch() {
        let tax = Taxonomy::standard();
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(
            file,
            r#"{{"id":"q1","text":"where","coarse":"NUMERIC","fine":"CITY"}}"#
        )
        .unwrap();
        match load_corpus(file.path(), &tax) {
            Err(QcError::LabelMismatch { fine, coarse, .. }) => {
                assert_eq!(fine, "CITY");
                assert_eq!(coarse, "NUMERIC");
            }
            other => panic!("expected mismatch, got {other:?}"),
        }
    }

    #[test]
    fn load_rejects_duplicate_id() {
        let tax = Taxonomy::standard();
        let mut file = tempfile::NamedTempFile::new().unwrap();
        for _ in 0..2 {
            writeln!(
                file,
                r#"{{"id":"q1","text":"x","coarse":"NUMERIC","fine":"DATE"}}"#
            )
            .unwrap();
        }
        assert!(matches!(
            load_corpus(file.path(), &tax),
            Err(QcError::DuplicateId { .. })
        ));
    }

    #[test]
    fn load_reports_malformed_line_number() {
        let tax = Taxonomy::standard();
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(
            file,
            r#"{{"id":"q1","text":"x","coarse":"NUMERIC","fine":"DATE"}}"#
        )
        .unwrap();
        writeln!(file, "not json").unwrap();
        match load_corpus(file.path(), &tax) {
            Err(QcError::MalformedLine { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected malformed line, got {other:?}"),
        }
    }

    #[test]
    fn stats_counts() {
        let tax = Taxonomy::standard();
        assert_eq!(corpus_stats(&[]).total, 0);
        let records = generate_synthetic_corpus(&tax, 7, 1.0);
        let stats = corpus_stats(&records);
        assert_eq!(stats.total, 3500);
        assert_eq!(stats.per_coarse["HUMAN"], 669);
        assert_eq!(stats.per_coarse["LOCATION"], 650);
        assert_eq!(stats.per_fine["DATE"], 452);
        assert_eq!(stats.per_fine["ABBREVIATION"], 519);
        // coarse counts equal the sum of their children
        for coarse in tax.coarse_classes() {
            let child_sum: usize = tax
                .fine_classes()
                .iter()
                .filter(|f| tax.coarse_of(f) == Some(coarse.as_str()))
                .map(|f| stats.per_fine.get(f.as_str()).copied().unwrap_or(0))
                .sum();
            assert_eq!(stats.per_coarse[coarse.as_str()], child_sum);
        }
    }

    #[test]
    fn generator_deterministic_and_seed_sensitive() {
        let tax = Taxonomy::standard();
        let a = generate_synthetic_corpus(&tax, 42, 0.05);
        let b = generate_synthetic_corpus(&tax, 42, 0.05);
        assert_eq!(a, b);
        let c = generate_synthetic_corpus(&tax, 43, 0.05);
        assert_ne!(a, c);
        // label counts are seed-independent
        let sa = corpus_stats(&a);
        let sc = corpus_stats(&c);
        assert_eq!(sa.per_fine, sc.per_fine);
    }

    #[test]
    fn generator_min_one_per_class() {
        let tax = Taxonomy::standard();
        let records = generate_synthetic_corpus(&tax, 1, 0.001);
        let stats = corpus_stats(&records);
        for fine in tax.fine_classes() {
            assert!(stats.per_fine[fine.as_str()] >= 1);
        }
    }

    #[test]
    fn corpus_round_trip() {
        let tax = Taxonomy::standard();
        let records = generate_synthetic_corpus(&tax, 9, 0.01);
        let file = tempfile::NamedTempFile::new().unwrap();
        save_corpus(file.path(), &records).unwrap();
        let loaded = load_corpus(file.path(), &tax).unwrap();
        assert_eq!(records, loaded);
    }

    #[test]
    fn stopword_parsing() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        write!(file, "# note\na\nb\n\nx\nx\n").unwrap();
        let stops = load_stopwords(file.path()).unwrap();
        assert_eq!(stops.len(), 3);
        assert!(stops.contains("a"));
        assert!(stops.contains("x"));
        assert!(!stops.contains("# note"));
    }

    #[test]
    fn stopword_file_round_trip() {
        let file = tempfile::NamedTempFile::new().unwrap();
        write_stopword_file(file.path()).unwrap();
        let stops = load_stopwords(file.path()).unwrap();
        assert_eq!(stops.len(), FILLER_TOKENS.len());
        for token in FILLER_TOKENS {
            assert!(stops.contains(token));
        }
    }
}
