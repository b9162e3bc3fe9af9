//! Vocabulary, bag-of-words counts and the TF-IDF weighted document-term
//! matrix.

use crate::preprocess::TokenizedDoc;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use thiserror::Error;

pub const DEFAULT_NO_BELOW: u64 = 2;
pub const DEFAULT_NO_ABOVE: f64 = 0.5;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("no tokens survive vocabulary filtering")]
    EmptyVocabulary,
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

/// Token ids, dense in 0..m, assigned in lexicographic token order so the
/// assignment does not depend on document order.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    token_to_id: BTreeMap<String, usize>,
    id_to_token: Vec<String>,
    doc_freq: Vec<u64>,
    n_docs: u64,
}

impl Vocabulary {
    /// Vocabulary size, the dimensionality m of the term space.
    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_token.is_empty()
    }

    pub fn n_docs(&self) -> u64 {
        self.n_docs
    }

    pub fn id_of(&self, token: &str) -> Option<usize> {
        self.token_to_id.get(token).copied()
    }

    pub fn token(&self, id: usize) -> &str {
        &self.id_to_token[id]
    }

    pub fn tokens(&self) -> &[String] {
        &self.id_to_token
    }

    pub fn doc_freq(&self, id: usize) -> u64 {
        self.doc_freq[id]
    }

    /// Hex digest over tokens, document frequencies and corpus size;
    /// stable across runs, changes whenever the fitted vocabulary does.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for (token, df) in self.id_to_token.iter().zip(&self.doc_freq) {
            hasher.update(token.as_bytes());
            hasher.update(b"\t");
            hasher.update(df.to_string().as_bytes());
            hasher.update(b"\n");
        }
        hasher.update(self.n_docs.to_string().as_bytes());
        let digest = hasher.finalize();
        digest.iter().fold(String::new(), |mut s, b| {
            s.push_str(&format!("{b:02x}"));
            s
        })
    }

    /// Writes `<id>\t<token>\t<doc_freq>` lines with an `# n_docs=` header.
    pub fn save(&self, path: &Path) -> io::Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "# n_docs={}", self.n_docs)?;
        for (id, (token, df)) in self.id_to_token.iter().zip(&self.doc_freq).enumerate() {
            writeln!(out, "{id}\t{token}\t{df}")?;
        }
        out.flush()
    }

    pub fn load(path: &Path) -> io::Result<Self> {
        let bad = |line: usize, what: &str| {
            io::Error::new(
                io::ErrorKind::InvalidData,
                format!("vocabulary line {line}: {what}"),
            )
        };
        let mut n_docs = 0u64;
        let mut id_to_token = Vec::new();
        let mut doc_freq = Vec::new();
        for (idx, line) in std::fs::read_to_string(path)?.lines().enumerate() {
            let line_no = idx + 1;
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("n_docs=") {
                    n_docs = v.parse().map_err(|_| bad(line_no, "bad n_docs"))?;
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [id, token, df] = fields.as_slice() else {
                return Err(bad(line_no, "expected id, token, doc_freq"));
            };
            let id: usize = id.parse().map_err(|_| bad(line_no, "bad id"))?;
            if id != id_to_token.len() {
                return Err(bad(line_no, "ids out of order"));
            }
            id_to_token.push(token.to_string());
            doc_freq.push(df.parse().map_err(|_| bad(line_no, "bad doc_freq"))?);
        }
        let token_to_id = id_to_token
            .iter()
            .enumerate()
            .map(|(id, t)| (t.clone(), id))
            .collect();
        Ok(Vocabulary {
            token_to_id,
            id_to_token,
            doc_freq,
            n_docs,
        })
    }
}

/// Row-sparse matrix of documents over terms; term ids within a row are
/// strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseDocTermMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseDocTermMatrix {
    pub fn from_rows(n_cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        for row in &rows {
            for pair in row.windows(2) {
                assert!(pair[0].0 < pair[1].0, "row term ids must be increasing");
            }
            if let Some(&(last, _)) = row.last() {
                assert!(last < n_cols, "term id {last} outside 0..{n_cols}");
            }
        }
        SparseDocTermMatrix {
            n_rows: rows.len(),
            n_cols,
            rows,
        }
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[(usize, f64)]> {
        self.rows.iter().map(Vec::as_slice)
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Squared Frobenius norm.
    pub fn frob_sq(&self) -> f64 {
        self.rows
            .iter()
            .flatten()
            .map(|&(_, v)| v * v)
            .sum()
    }

    /// Writes `n_rows n_cols nnz` then `row col value` triplets in
    /// ascending (row, col) order.
    pub fn save(&self, path: &Path) -> io::Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{} {} {}", self.n_rows, self.n_cols, self.nnz())?;
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                writeln!(out, "{r} {c} {v}")?;
            }
        }
        out.flush()
    }

    pub fn load(path: &Path) -> io::Result<Self> {
        let bad = |line: usize, what: &str| {
            io::Error::new(
                io::ErrorKind::InvalidData,
                format!("matrix line {line}: {what}"),
            )
        };
        let mut reader = BufReader::new(File::open(path)?).lines();
        let header = reader
            .next()
            .ok_or_else(|| bad(1, "missing header"))??;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad(1, "bad header")))
            .collect::<Result<_, _>>()?;
        let [n_rows, n_cols, nnz] = dims.as_slice() else {
            return Err(bad(1, "expected n_rows n_cols nnz"));
        };
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); *n_rows];
        let mut seen = 0usize;
        let mut last: Option<(usize, usize)> = None;
        for (idx, line) in reader.enumerate() {
            let line = line?;
            let line_no = idx + 2;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [r, c, v] = fields.as_slice() else {
                return Err(bad(line_no, "expected row col value"));
            };
            let r: usize = r.parse().map_err(|_| bad(line_no, "bad row"))?;
            let c: usize = c.parse().map_err(|_| bad(line_no, "bad col"))?;
            let v: f64 = v.parse().map_err(|_| bad(line_no, "bad value"))?;
            if r >= *n_rows || c >= *n_cols {
                return Err(bad(line_no, "entry outside the stated shape"));
            }
            if let Some(prev) = last {
                if (r, c) <= prev {
                    return Err(bad(line_no, "entries not in ascending order"));
                }
            }
            last = Some((r, c));
            rows[r].push((c, v));
            seen += 1;
        }
        if seen != *nnz {
            return Err(bad(0, "entry count does not match header"));
        }
        Ok(SparseDocTermMatrix {
            n_rows: *n_rows,
            n_cols: *n_cols,
            rows,
        })
    }
}

/// Builds the vocabulary, keeping tokens whose document frequency is at
/// least `no_below` and at most `no_above * n_docs`. Ids follow
/// lexicographic token order.
pub fn build_vocabulary(
    docs: &[TokenizedDoc],
    no_below: u64,
    no_above: f64,
) -> Result<Vocabulary, CorpusError> {
    assert!(
        no_above > 0.0 && no_above <= 1.0,
        "no_above must lie in (0, 1]"
    );
    let n_docs = docs.len() as u64;
    let mut freq: BTreeMap<&str, u64> = BTreeMap::new();
    for doc in docs {
        let mut seen: Vec<&str> = doc.tokens.iter().map(String::as_str).collect();
        seen.sort_unstable();
        seen.dedup();
        for token in seen {
            *freq.entry(token).or_insert(0) += 1;
        }
    }
    let cap = no_above * n_docs as f64;
    let mut id_to_token = Vec::new();
    let mut doc_freq = Vec::new();
    for (token, df) in freq {
        if df >= no_below.max(1) && df as f64 <= cap {
            id_to_token.push(token.to_string());
            doc_freq.push(df);
        }
    }
    if id_to_token.is_empty() {
        return Err(CorpusError::EmptyVocabulary);
    }
    let token_to_id = id_to_token
        .iter()
        .enumerate()
        .map(|(id, t)| (t.clone(), id))
        .collect();
    Ok(Vocabulary {
        token_to_id,
        id_to_token,
        doc_freq,
        n_docs,
    })
}

/// Counts in-vocabulary tokens of one document; out-of-vocabulary tokens
/// are dropped silently. Returns (term_id, count) sorted by id.
pub fn doc_to_bow(doc: &TokenizedDoc, vocab: &Vocabulary) -> Vec<(usize, u64)> {
    let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
    for token in &doc.tokens {
        if let Some(id) = vocab.id_of(token) {
            *counts.entry(id).or_insert(0) += 1;
        }
    }
    counts.into_iter().collect()
}

/// Stacks per-document bags of words into a count matrix.
pub fn bow_matrix(docs: &[TokenizedDoc], vocab: &Vocabulary) -> SparseDocTermMatrix {
    let rows = docs
        .iter()
        .map(|d| {
            doc_to_bow(d, vocab)
                .into_iter()
                .map(|(id, c)| (id, c as f64))
                .collect()
        })
        .collect();
    SparseDocTermMatrix {
        n_rows: docs.len(),
        n_cols: vocab.len(),
        rows,
    }
}

/// Reweights counts as tf * ln(n_docs / doc_freq), drops exact zeros
/// (terms present in every document) and L2-normalizes each nonzero row.
pub fn tfidf_weight(counts: &SparseDocTermMatrix, vocab: &Vocabulary) -> SparseDocTermMatrix {
    assert_eq!(counts.n_cols, vocab.len(), "matrix and vocabulary disagree");
    let n = vocab.n_docs() as f64;
    let rows = counts
        .rows()
        .map(|row| {
            let mut weighted: Vec<(usize, f64)> = row
                .iter()
                .map(|&(t, tf)| (t, tf * (n / vocab.doc_freq(t) as f64).ln()))
                .filter(|&(_, w)| w != 0.0)
                .collect();
            let norm = weighted.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt();
            if norm > 0.0 {
                for (_, w) in &mut weighted {
                    *w /= norm;
                }
            }
            weighted
        })
        .collect();
    SparseDocTermMatrix {
        n_rows: counts.n_rows,
        n_cols: counts.n_cols,
        rows,
    }
}
