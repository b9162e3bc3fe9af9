//! Text preparation chain: cleaning, tokenization, stopword removal, bigram
//! phrases, Porter stemming.
//!
//! Stages always run in the fixed order clean -> tokenize -> stopwords ->
//! phrases -> stem. Every stage is a pure function of its input, so the
//! whole chain is reproducible token for token. Phrases are learned on the
//! tokenized, stopped (but not yet stemmed) corpus, so surface bigrams are
//! what get joined.

mod porter;

pub use porter::porter_stem;

use crate::ingest::Document;
use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

/// One document after the full chain: ordered lowercase tokens, underscores
/// only from phrase joins.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedDoc {
    pub doc_id: String,
    pub tokens: Vec<String>,
}

static EMAIL: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}").unwrap());
static URL: Lazy<Regex> = Lazy::new(|| Regex::new(r"(?:https?://|www\.)\S+").unwrap());
static MENTION: Lazy<Regex> = Lazy::new(|| Regex::new(r"@[A-Za-z0-9_]+:?").unwrap());
static RETWEET_MARKER: Lazy<Regex> = Lazy::new(|| Regex::new(r"\bRT\b").unwrap());
static WHITESPACE: Lazy<Regex> = Lazy::new(|| Regex::new(r"\s+").unwrap());

/// Strips emails, URLs, @-mentions, the standalone marker RT and newlines,
/// then collapses whitespace runs to single spaces and trims the ends.
pub fn clean_text(raw: &str) -> String {
    let text = EMAIL.replace_all(raw, " ");
    let text = URL.replace_all(&text, " ");
    let text = MENTION.replace_all(&text, " ");
    let text = RETWEET_MARKER.replace_all(&text, " ");
    WHITESPACE.replace_all(&text, " ").trim().to_string()
}

/// Lowercases, splits on anything outside a-z and keeps tokens of length
/// 2 to 15.
pub fn tokenize(cleaned: &str) -> Vec<String> {
    cleaned
        .to_lowercase()
        .split(|c: char| !c.is_ascii_lowercase())
        .filter(|t| t.len() >= 2 && t.len() <= 15)
        .map(str::to_string)
        .collect()
}

/// Lowercase words to drop after tokenization.
#[derive(Debug, Clone)]
pub struct StopwordSet {
    words: BTreeSet<String>,
}

static STANDARD_STOPWORDS: &str = include_str!("../../resources/stopwords_en.txt");

impl StopwordSet {
    /// The bundled standard English list.
    pub fn standard() -> Self {
        Self::from_lines(STANDARD_STOPWORDS).expect("bundled stopword list is valid")
    }

    /// Reads one word per line; `#` starts a comment, blank lines are
    /// ignored. The list must be non-empty and contain at least "for",
    /// "or" and "the".
    pub fn load(path: &Path) -> io::Result<Self> {
        Self::from_lines(&fs::read_to_string(path)?)
    }

    pub fn from_lines(text: &str) -> io::Result<Self> {
        let words: BTreeSet<String> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.to_lowercase())
            .collect();
        for required in ["for", "or", "the"] {
            if !words.contains(required) {
                return Err(io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("stopword list is missing \"{required}\""),
                ));
            }
        }
        Ok(StopwordSet { words })
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
}

/// Drops stopwords, preserving the order of everything else.
pub fn remove_stopwords(tokens: Vec<String>, stops: &StopwordSet) -> Vec<String> {
    tokens.into_iter().filter(|t| !stops.contains(t)).collect()
}

/// Bigram statistics plus the acceptance rule for joining adjacent tokens.
#[derive(Debug, Clone)]
pub struct PhraseModel {
    unigram_counts: HashMap<String, u64>,
    bigram_counts: HashMap<(String, String), u64>,
    min_count: u64,
    threshold: f64,
}

pub const DEFAULT_PHRASE_MIN_COUNT: u64 = 5;
pub const DEFAULT_PHRASE_THRESHOLD: f64 = 10.0;

/// Counts unigrams and adjacent bigrams over tokenized documents. A bigram
/// (a, b) is later accepted as a phrase iff
/// ((count_ab - min_count) * vocab_size) / (count_a * count_b) > threshold.
pub fn learn_phrases(docs: &[Vec<String>], min_count: u64, threshold: f64) -> PhraseModel {
    assert!(min_count >= 1, "min_count must be at least 1");
    assert!(threshold > 0.0, "threshold must be positive");
    let mut unigram_counts: HashMap<String, u64> = HashMap::new();
    let mut bigram_counts: HashMap<(String, String), u64> = HashMap::new();
    for tokens in docs {
        for token in tokens {
            *unigram_counts.entry(token.clone()).or_insert(0) += 1;
        }
        for pair in tokens.windows(2) {
            *bigram_counts
                .entry((pair[0].clone(), pair[1].clone()))
                .or_insert(0) += 1;
        }
    }
    PhraseModel {
        unigram_counts,
        bigram_counts,
        min_count,
        threshold,
    }
}

impl PhraseModel {
    /// A model that joins nothing.
    pub fn empty() -> Self {
        PhraseModel {
            unigram_counts: HashMap::new(),
            bigram_counts: HashMap::new(),
            min_count: DEFAULT_PHRASE_MIN_COUNT,
            threshold: DEFAULT_PHRASE_THRESHOLD,
        }
    }

    pub fn from_counts(
        unigram_counts: HashMap<String, u64>,
        bigram_counts: HashMap<(String, String), u64>,
        min_count: u64,
        threshold: f64,
    ) -> Self {
        assert!(min_count >= 1, "min_count must be at least 1");
        assert!(threshold > 0.0, "threshold must be positive");
        PhraseModel {
            unigram_counts,
            bigram_counts,
            min_count,
            threshold,
        }
    }

    /// Number of distinct unigrams seen while learning.
    pub fn vocab_size(&self) -> usize {
        self.unigram_counts.len()
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Phrase score of an adjacent pair; None when either part was never
    /// seen as a unigram.
    pub fn score(&self, a: &str, b: &str) -> Option<f64> {
        let count_a = *self.unigram_counts.get(a)? as f64;
        let count_b = *self.unigram_counts.get(b)? as f64;
        let count_ab = self
            .bigram_counts
            .get(&(a.to_string(), b.to_string()))
            .copied()
            .unwrap_or(0) as f64;
        let vocab = self.vocab_size() as f64;
        Some((count_ab - self.min_count as f64) * vocab / (count_a * count_b))
    }

    pub fn is_phrase(&self, a: &str, b: &str) -> bool {
        self.score(a, b).is_some_and(|s| s > self.threshold)
    }

    /// Writes counts as a tab-separated file so a learned model can be
    /// reapplied to held-out documents.
    pub fn save(&self, path: &Path) -> io::Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "min_count\t{}", self.min_count)?;
        writeln!(out, "threshold\t{}", self.threshold)?;
        let unigrams: BTreeMap<&String, u64> =
            self.unigram_counts.iter().map(|(t, c)| (t, *c)).collect();
        for (token, count) in unigrams {
            writeln!(out, "u\t{token}\t{count}")?;
        }
        let bigrams: BTreeMap<(&String, &String), u64> = self
            .bigram_counts
            .iter()
            .map(|((a, b), c)| ((a, b), *c))
            .collect();
        for ((a, b), count) in bigrams {
            writeln!(out, "b\t{a}\t{b}\t{count}")?;
        }
        out.flush()
    }

    pub fn load(path: &Path) -> io::Result<Self> {
        let bad = |line: usize, what: &str| {
            io::Error::new(
                io::ErrorKind::InvalidData,
                format!("phrase model line {line}: {what}"),
            )
        };
        let mut min_count = None;
        let mut threshold = None;
        let mut unigram_counts = HashMap::new();
        let mut bigram_counts = HashMap::new();
        for (idx, line) in fs::read_to_string(path)?.lines().enumerate() {
            let line_no = idx + 1;
            let fields: Vec<&str> = line.split('\t').collect();
            match fields.as_slice() {
                ["min_count", v] => {
                    min_count = Some(v.parse().map_err(|_| bad(line_no, "bad min_count"))?)
                }
                ["threshold", v] => {
                    threshold = Some(v.parse().map_err(|_| bad(line_no, "bad threshold"))?)
                }
                ["u", token, count] => {
                    let count = count.parse().map_err(|_| bad(line_no, "bad count"))?;
                    unigram_counts.insert(token.to_string(), count);
                }
                ["b", a, b, count] => {
                    let count = count.parse().map_err(|_| bad(line_no, "bad count"))?;
                    bigram_counts.insert((a.to_string(), b.to_string()), count);
                }
                _ => return Err(bad(line_no, "unrecognized row")),
            }
        }
        let min_count = min_count.ok_or_else(|| bad(0, "missing min_count"))?;
        let threshold = threshold.ok_or_else(|| bad(0, "missing threshold"))?;
        Ok(PhraseModel::from_counts(
            unigram_counts,
            bigram_counts,
            min_count,
            threshold,
        ))
    }
}

/// One greedy left-to-right pass; each accepted adjacent pair becomes
/// "a_b", and a joined token cannot join again in the same pass.
pub fn apply_phrases(tokens: &[String], model: &PhraseModel) -> Vec<String> {
    let mut out = Vec::with_capacity(tokens.len());
    let mut i = 0;
    while i < tokens.len() {
        if i + 1 < tokens.len() && model.is_phrase(&tokens[i], &tokens[i + 1]) {
            out.push(format!("{}_{}", tokens[i], tokens[i + 1]));
            i += 2;
        } else {
            out.push(tokens[i].clone());
            i += 1;
        }
    }
    out
}

/// Stems a token; phrase tokens stem each underscore-separated part and
/// rejoin.
pub fn stem_token(token: &str) -> String {
    if token.contains('_') {
        token
            .split('_')
            .map(porter_stem)
            .collect::<Vec<_>>()
            .join("_")
    } else {
        porter_stem(token)
    }
}

/// Runs the full chain on one document.
pub fn preprocess_doc(doc: &Document, stops: &StopwordSet, phrases: &PhraseModel) -> TokenizedDoc {
    TokenizedDoc {
        doc_id: doc.id.clone(),
        tokens: preprocess_text(&doc.text, stops, phrases),
    }
}

/// The full chain on raw text: clean, tokenize, drop stopwords, join
/// phrases, stem.
pub fn preprocess_text(raw: &str, stops: &StopwordSet, phrases: &PhraseModel) -> Vec<String> {
    let tokens = remove_stopwords(tokenize(&clean_text(raw)), stops);
    apply_phrases(&tokens, phrases)
        .iter()
        .map(|t| stem_token(t))
        .collect()
}

/// Tokenizes a whole corpus: learns the phrase model on the cleaned,
/// stopped token lists, then applies it and stems. Returns the documents
/// and the learned model.
pub fn preprocess_corpus(
    docs: &[Document],
    stops: &StopwordSet,
    min_count: u64,
    threshold: f64,
) -> (Vec<TokenizedDoc>, PhraseModel) {
    let stopped: Vec<Vec<String>> = docs
        .iter()
        .map(|d| remove_stopwords(tokenize(&clean_text(&d.text)), stops))
        .collect();
    let phrases = learn_phrases(&stopped, min_count, threshold);
    let tokenized = docs
        .iter()
        .zip(&stopped)
        .map(|(doc, tokens)| TokenizedDoc {
            doc_id: doc.id.clone(),
            tokens: apply_phrases(tokens, &phrases)
                .iter()
                .map(|t| stem_token(t))
                .collect(),
        })
        .collect();
    (tokenized, phrases)
}

/// Like [`preprocess_corpus`] but applies an already learned phrase model,
/// for held-out documents that must match a training vocabulary.
pub fn preprocess_corpus_with(
    docs: &[Document],
    stops: &StopwordSet,
    phrases: &PhraseModel,
) -> Vec<TokenizedDoc> {
    docs.iter()
        .map(|d| preprocess_doc(d, stops, phrases))
        .collect()
}

/// Writes tokenized documents as newline-delimited JSON records.
pub fn write_tokenized(path: &Path, docs: &[TokenizedDoc]) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for doc in docs {
        serde_json::to_writer(&mut out, doc)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_tokenized(path: &Path) -> io::Result<Vec<TokenizedDoc>> {
    let reader = BufReader::new(File::open(path)?);
    let mut docs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: TokenizedDoc = serde_json::from_str(&line).map_err(|e| {
            io::Error::new(
                io::ErrorKind::InvalidData,
                format!("tokenized doc line {}: {e}", idx + 1),
            )
        })?;
        docs.push(doc);
    }
    Ok(docs)
}
