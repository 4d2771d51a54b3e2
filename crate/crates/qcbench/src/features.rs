//! Tokenization, stop-word elimination, word n-grams, vocabulary building
//! and TF-IDF sparse vectorization.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::StopWordList;
use crate::error::{QcError, Result};

/// Whether stop words are eliminated before n-gram extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StopwordMode {
    Remove,
    Keep,
}

impl std::str::FromStr for StopwordMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "remove" => Ok(StopwordMode::Remove),
            "keep" => Ok(StopwordMode::Keep),
            other => Err(format!("unknown stopword mode '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub ngram_min: usize,
    pub ngram_max: usize,
    pub stopword_mode: StopwordMode,
    pub min_df: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            ngram_min: 1,
            ngram_max: 2,
            stopword_mode: StopwordMode::Keep,
            min_df: 1,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ngram_min < 1 || self.ngram_min > self.ngram_max || self.ngram_max > 3 {
            return Err(QcError::InvalidFeatureConfig(format!(
                "ngram range {}..{} outside 1..=3",
                self.ngram_min, self.ngram_max
            )));
        }
        if self.min_df < 1 {
            return Err(QcError::InvalidFeatureConfig("min_df must be >= 1".into()));
        }
        Ok(())
    }
}

// Punctuation stripped from token edges. Bengali has no case, so there is
// no case folding anywhere in the pipeline.
fn is_strip_char(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '।' | '॥'
                | '\u{2018}'
                | '\u{2019}'
                | '\u{201C}'
                | '\u{201D}'
                | '«'
                | '»'
                | '…'
                | '—'
                | '–'
                | '¿'
                | '¡'
                | '·'
        )
}

/// Splits on Unicode whitespace and strips punctuation off token edges.
/// Tokens that become empty are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|raw| raw.trim_matches(is_strip_char))
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Removes exact-match stop words, preserving order.
pub fn remove_stopwords(tokens: &[String], stops: &StopWordList) -> Vec<String> {
    tokens
        .iter()
        .filter(|t| !stops.contains(t))
        .cloned()
        .collect()
}

/// Emits all contiguous n-token windows for n in `[ngram_min, ngram_max]`,
/// joined by single spaces; shorter n-grams first, each in text order.
pub fn extract_ngrams(tokens: &[String], cfg: &FeatureConfig) -> Vec<String> {
    let mut terms = Vec::new();
    for n in cfg.ngram_min..=cfg.ngram_max {
        if tokens.len() < n {
            continue;
        }
        for window in tokens.windows(n) {
            terms.push(window.join(" "));
        }
    }
    terms
}

/// Term-index and document-frequency bookkeeping for TF-IDF.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Vocabulary {
    terms: Vec<String>,
    #[serde(skip)]
    term_index: HashMap<String, usize>,
    doc_freq: Vec<u32>,
    n_docs: usize,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.term_index.get(term).copied()
    }

    pub fn doc_freq(&self, index: usize) -> u32 {
        self.doc_freq[index]
    }

    pub fn term(&self, index: usize) -> &str {
        &self.terms[index]
    }

    /// Smoothed inverse document frequency: ln((1 + N)/(1 + df)) + 1.
    pub fn idf(&self, index: usize) -> f64 {
        ((1.0 + self.n_docs as f64) / (1.0 + self.doc_freq[index] as f64)).ln() + 1.0
    }

    /// Rebuilds the term->index map after deserialization.
    pub fn rebuild_index(&mut self) {
        self.term_index = self
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
    }

    /// Keeps only the `p` most frequent terms (benchmark knob for scanning
    /// the feature axis), most frequent first; ties keep original order.
    /// Document frequencies are preserved.
    pub fn truncated(&self, p: usize) -> Vocabulary {
        let mut order: Vec<usize> = (0..self.terms.len()).collect();
        order.sort_by_key(|&i| (std::cmp::Reverse(self.doc_freq[i]), i));
        order.truncate(p);
        let mut v = Vocabulary {
            terms: order.iter().map(|&i| self.terms[i].clone()).collect(),
            term_index: HashMap::new(),
            doc_freq: order.iter().map(|&i| self.doc_freq[i]).collect(),
            n_docs: self.n_docs,
        };
        v.rebuild_index();
        v
    }
}

/// Builds a vocabulary over term lists. Terms are indexed in first-occurrence
/// order over the corpus scan; terms below `min_df` are dropped.
pub fn build_vocabulary(term_lists: &[Vec<String>], cfg: &FeatureConfig) -> Result<Vocabulary> {
    cfg.validate()?;
    if term_lists.iter().all(|d| d.is_empty()) {
        return Err(QcError::EmptyCorpus);
    }
    let mut first_order: Vec<String> = Vec::new();
    // term -> (document frequency, last document that counted it)
    let mut df: HashMap<String, (u32, usize)> = HashMap::new();
    for (doc_id, doc) in term_lists.iter().enumerate() {
        for term in doc {
            match df.get_mut(term.as_str()) {
                Some((count, last_doc)) => {
                    if *last_doc != doc_id {
                        *count += 1;
                        *last_doc = doc_id;
                    }
                }
                None => {
                    df.insert(term.clone(), (1, doc_id));
                    first_order.push(term.clone());
                }
            }
        }
    }
    let mut terms = Vec::new();
    let mut doc_freq = Vec::new();
    for term in first_order {
        let (f, _) = df[&term];
        if f as usize >= cfg.min_df {
            doc_freq.push(f);
            terms.push(term);
        }
    }
    let mut vocab = Vocabulary {
        terms,
        term_index: HashMap::new(),
        doc_freq,
        n_docs: term_lists.len(),
    };
    vocab.rebuild_index();
    Ok(vocab)
}

/// Sparse row: strictly increasing column indices, no stored zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseVector {
    pub fn empty() -> Self {
        SparseVector {
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from unsorted (index, value) pairs; zero values are dropped,
    /// duplicate indices summed.
    pub fn from_pairs(mut pairs: Vec<(u32, f64)>) -> Self {
        pairs.sort_by_key(|(i, _)| *i);
        let mut indices = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        for (i, v) in pairs {
            if let (Some(last), Some(lv)) = (indices.last().copied(), values.last_mut()) {
                if last == i {
                    *lv += v;
                    continue;
                }
            }
            indices.push(i);
            values.push(v);
        }
        let keep: Vec<bool> = values.iter().map(|v| *v != 0.0).collect();
        let mut out = SparseVector::empty();
        for (k, (i, v)) in keep.iter().zip(indices.iter().zip(values.iter())) {
            if *k {
                out.indices.push(*i);
                out.values.push(*v);
            }
        }
        out
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let mut sum = 0.0;
        let (mut a, mut b) = (0usize, 0usize);
        while a < self.nnz() && b < other.nnz() {
            match self.indices[a].cmp(&other.indices[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    sum += self.values[a] * other.values[b];
                    a += 1;
                    b += 1;
                }
            }
        }
        sum
    }

    /// Squared Euclidean distance.
    pub fn sq_dist(&self, other: &SparseVector) -> f64 {
        let mut sum = 0.0;
        let (mut a, mut b) = (0usize, 0usize);
        while a < self.nnz() || b < other.nnz() {
            if b >= other.nnz() || (a < self.nnz() && self.indices[a] < other.indices[b]) {
                sum += self.values[a] * self.values[a];
                a += 1;
            } else if a >= self.nnz() || other.indices[b] < self.indices[a] {
                sum += other.values[b] * other.values[b];
                b += 1;
            } else {
                let d = self.values[a] - other.values[b];
                sum += d * d;
                a += 1;
                b += 1;
            }
        }
        sum
    }

    pub fn scale_in_place(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }
}

/// TF-IDF vectorization of a term sequence against a fitted vocabulary.
///
/// tf is the raw in-document term count, idf(t) = ln((1+N)/(1+df)) + 1, and
/// the result is L2-normalized unless all-zero. Out-of-vocabulary terms are
/// dropped.
pub fn vectorize_tfidf(terms: &[String], vocab: &Vocabulary) -> SparseVector {
    let mut tf: HashMap<usize, f64> = HashMap::new();
    for term in terms {
        if let Some(idx) = vocab.index_of(term) {
            *tf.entry(idx).or_insert(0.0) += 1.0;
        }
    }
    let pairs: Vec<(u32, f64)> = tf
        .into_iter()
        .map(|(idx, count)| (idx as u32, count * vocab.idf(idx)))
        .collect();
    let mut vector = SparseVector::from_pairs(pairs);
    let norm = vector.norm();
    if norm > 0.0 {
        vector.scale_in_place(1.0 / norm);
    }
    vector
}

/// Full document pipeline: tokenize, optionally drop stop words, expand
/// n-grams.
pub fn terms_of_text(text: &str, cfg: &FeatureConfig, stops: &StopWordList) -> Vec<String> {
    let tokens = tokenize(text);
    let tokens = match cfg.stopword_mode {
        StopwordMode::Remove => remove_stopwords(&tokens, stops),
        StopwordMode::Keep => tokens,
    };
    extract_ngrams(&tokens, cfg)
}
