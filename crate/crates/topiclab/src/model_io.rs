//! Versioned on-disk container for trained models.
//!
//! Files start with the magic line `TLAB1` followed by a line-oriented text
//! body: `key = value` headers, `matrix <name> <rows> <cols>` blocks with one
//! whitespace-separated row per line, and a closing `end` line that guards
//! against truncation. Floats are written with Rust's shortest round-trip
//! formatting, so loading restores bit-identical values.
//!
//! Every file records the content hash of the vocabulary the model was
//! trained against. Consumers compare it to the vocabulary they are about to
//! use and refuse mismatches instead of silently mixing term ids.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;
use thiserror::Error;

use crate::lda::LdaModel;
use crate::lsa::LsaModel;
use crate::nmf::NmfModel;

pub const MAGIC: &str = "TLAB1";

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a model file: expected magic {MAGIC}, found {0:?}")]
    BadMagic(String),
    #[error("unknown model type {0:?}")]
    UnknownModelType(String),
    #[error("malformed model file at line {line}: {message}")]
    Malformed { line: usize, message: String },
}

#[derive(Debug, Clone)]
pub enum SavedModel {
    Lsa(LsaModel),
    Nmf(NmfModel),
    Lda(LdaModel),
}

impl SavedModel {
    pub fn kind(&self) -> &'static str {
        match self {
            SavedModel::Lsa(_) => "lsa",
            SavedModel::Nmf(_) => "nmf",
            SavedModel::Lda(_) => "lda",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ModelFile {
    /// Content hash of the vocabulary the model was trained against.
    pub vocab_hash: String,
    pub model: SavedModel,
}

fn push_matrix_f64(out: &mut String, name: &str, m: &Array2<f64>) {
    writeln!(out, "matrix {name} {} {}", m.nrows(), m.ncols()).unwrap();
    for row in m.rows() {
        let mut first = true;
        for v in row.iter() {
            if !first {
                out.push(' ');
            }
            write!(out, "{v}").unwrap();
            first = false;
        }
        out.push('\n');
    }
}

fn push_matrix_u64(out: &mut String, name: &str, m: &Array2<u64>) {
    writeln!(out, "matrix {name} {} {}", m.nrows(), m.ncols()).unwrap();
    for row in m.rows() {
        let mut first = true;
        for v in row.iter() {
            if !first {
                out.push(' ');
            }
            write!(out, "{v}").unwrap();
            first = false;
        }
        out.push('\n');
    }
}

fn push_list<T: std::fmt::Display>(out: &mut String, key: &str, values: &[T]) {
    write!(out, "{key} =").unwrap();
    for v in values {
        write!(out, " {v}").unwrap();
    }
    out.push('\n');
}

/// Saves an LSA model. Only the term-side factors are persisted; document
/// projections are recomputable from the corpus and are left out.
pub fn save_lsa(model: &LsaModel, vocab_hash: &str, path: &Path) -> Result<(), ModelIoError> {
    let mut out = String::new();
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(out, "model = lsa").unwrap();
    writeln!(out, "vocab_hash = {vocab_hash}").unwrap();
    writeln!(out, "k = {}", model.k).unwrap();
    writeln!(out, "seed = {}", model.seed).unwrap();
    push_list(&mut out, "singular_values", &model.singular_values);
    push_matrix_f64(&mut out, "term_loadings", &model.term_loadings);
    writeln!(out, "end").unwrap();
    fs::write(path, out)?;
    Ok(())
}

/// Saves an NMF model. The objective trace is summarized to its first and
/// last values; `include_w` controls whether the document-side factor is
/// written (it scales with the corpus and is often not needed downstream).
pub fn save_nmf(
    model: &NmfModel,
    vocab_hash: &str,
    include_w: bool,
    path: &Path,
) -> Result<(), ModelIoError> {
    let mut out = String::new();
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(out, "model = nmf").unwrap();
    writeln!(out, "vocab_hash = {vocab_hash}").unwrap();
    writeln!(out, "k = {}", model.k).unwrap();
    writeln!(out, "seed = {}", model.seed).unwrap();
    writeln!(out, "n_iters = {}", model.n_iters).unwrap();
    let summary: Vec<f64> = match (model.objective_trace.first(), model.objective_trace.last()) {
        (Some(&a), Some(&b)) => vec![a, b],
        _ => Vec::new(),
    };
    push_list(&mut out, "objective_trace", &summary);
    push_matrix_f64(&mut out, "h", &model.h);
    if include_w {
        push_matrix_f64(&mut out, "w", &model.w);
    }
    writeln!(out, "end").unwrap();
    fs::write(path, out)?;
    Ok(())
}

/// Saves an LDA model, including the training document-topic distribution so
/// downstream stages (assignment export, visualization) can reuse it without
/// re-running inference.
pub fn save_lda(model: &LdaModel, vocab_hash: &str, path: &Path) -> Result<(), ModelIoError> {
    let mut out = String::new();
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(out, "model = lda").unwrap();
    writeln!(out, "vocab_hash = {vocab_hash}").unwrap();
    writeln!(out, "k = {}", model.k).unwrap();
    writeln!(out, "alpha = {}", model.alpha).unwrap();
    writeln!(out, "beta = {}", model.beta).unwrap();
    writeln!(out, "seed = {}", model.seed).unwrap();
    writeln!(out, "n_iters = {}", model.n_iters).unwrap();
    push_list(&mut out, "topic_counts", &model.topic_counts);
    push_matrix_u64(&mut out, "topic_word_counts", &model.topic_word_counts);
    push_matrix_f64(&mut out, "phi", &model.phi);
    push_matrix_f64(&mut out, "theta", &model.theta_train);
    writeln!(out, "end").unwrap();
    fs::write(path, out)?;
    Ok(())
}

struct Cursor<'a> {
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Cursor {
            lines: text.lines().collect(),
            pos: 0,
        }
    }

    fn next(&mut self) -> Result<&'a str, ModelIoError> {
        match self.lines.get(self.pos) {
            Some(line) => {
                self.pos += 1;
                Ok(line)
            }
            None => Err(ModelIoError::Malformed {
                line: self.pos + 1,
                message: "unexpected end of file".to_string(),
            }),
        }
    }

    fn line_no(&self) -> usize {
        self.pos
    }

    fn key_value(&mut self, key: &str) -> Result<&'a str, ModelIoError> {
        let line = self.next()?;
        let no = self.line_no();
        match line.split_once(" = ") {
            Some((k, v)) if k == key => Ok(v),
            _ => Err(ModelIoError::Malformed {
                line: no,
                message: format!("expected `{key} = ...`, found {line:?}"),
            }),
        }
    }

    fn parse<T: FromStr>(&self, value: &str) -> Result<T, ModelIoError> {
        value.parse::<T>().map_err(|_| ModelIoError::Malformed {
            line: self.line_no(),
            message: format!("cannot parse {value:?}"),
        })
    }

    fn parsed_key<T: FromStr>(&mut self, key: &str) -> Result<T, ModelIoError> {
        let v = self.key_value(key)?;
        self.parse(v)
    }

    fn list<T: FromStr>(&mut self, key: &str) -> Result<Vec<T>, ModelIoError> {
        let raw = self.key_value(key)?;
        raw.split_whitespace().map(|v| self.parse(v)).collect()
    }

    fn matrix<T: FromStr + Clone + Default>(
        &mut self,
        name: &str,
    ) -> Result<Array2<T>, ModelIoError> {
        let header = self.next()?;
        let no = self.line_no();
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 4 || parts[0] != "matrix" || parts[1] != name {
            return Err(ModelIoError::Malformed {
                line: no,
                message: format!("expected `matrix {name} <rows> <cols>`, found {header:?}"),
            });
        }
        let rows: usize = self.parse(parts[2])?;
        let cols: usize = self.parse(parts[3])?;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let line = self.next()?;
            let no = self.line_no();
            let before = data.len();
            for v in line.split_whitespace() {
                data.push(self.parse::<T>(v)?);
            }
            if data.len() - before != cols {
                return Err(ModelIoError::Malformed {
                    line: no,
                    message: format!(
                        "matrix {name} row has {} values, expected {cols}",
                        data.len() - before
                    ),
                });
            }
        }
        Array2::from_shape_vec((rows, cols), data).map_err(|e| ModelIoError::Malformed {
            line: self.line_no(),
            message: format!("matrix {name} shape error: {e}"),
        })
    }

    fn expect(&mut self, literal: &str) -> Result<(), ModelIoError> {
        let line = self.next()?;
        let no = self.line_no();
        if line != literal {
            return Err(ModelIoError::Malformed {
                line: no,
                message: format!("expected {literal:?}, found {line:?}"),
            });
        }
        Ok(())
    }

    fn peek(&self) -> Option<&'a str> {
        self.lines.get(self.pos).copied()
    }
}

pub fn load_model(path: &Path) -> Result<ModelFile, ModelIoError> {
    let text = fs::read_to_string(path)?;
    let mut cur = Cursor::new(&text);
    let magic = cur.next()?;
    if magic != MAGIC {
        return Err(ModelIoError::BadMagic(magic.to_string()));
    }
    let kind = cur.key_value("model")?.to_string();
    let vocab_hash = cur.key_value("vocab_hash")?.to_string();
    let model = match kind.as_str() {
        "lsa" => {
            let k: usize = cur.parsed_key("k")?;
            let seed: u64 = cur.parsed_key("seed")?;
            let singular_values: Vec<f64> = cur.list("singular_values")?;
            let term_loadings: Array2<f64> = cur.matrix("term_loadings")?;
            cur.expect("end")?;
            SavedModel::Lsa(LsaModel {
                k,
                singular_values,
                term_loadings,
                doc_projections: Array2::zeros((0, k)),
                seed,
            })
        }
        "nmf" => {
            let k: usize = cur.parsed_key("k")?;
            let seed: u64 = cur.parsed_key("seed")?;
            let n_iters: usize = cur.parsed_key("n_iters")?;
            let objective_trace: Vec<f64> = cur.list("objective_trace")?;
            let h: Array2<f64> = cur.matrix("h")?;
            let w = if cur.peek().map(|l| l.starts_with("matrix w ")) == Some(true) {
                cur.matrix("w")?
            } else {
                Array2::zeros((0, k))
            };
            cur.expect("end")?;
            SavedModel::Nmf(NmfModel {
                k,
                w,
                h,
                objective_trace,
                seed,
                n_iters,
            })
        }
        "lda" => {
            let k: usize = cur.parsed_key("k")?;
            let alpha: f64 = cur.parsed_key("alpha")?;
            let beta: f64 = cur.parsed_key("beta")?;
            let seed: u64 = cur.parsed_key("seed")?;
            let n_iters: usize = cur.parsed_key("n_iters")?;
            let topic_counts: Vec<u64> = cur.list("topic_counts")?;
            let topic_word_counts: Array2<u64> = cur.matrix("topic_word_counts")?;
            let phi: Array2<f64> = cur.matrix("phi")?;
            let theta_train: Array2<f64> = cur.matrix("theta")?;
            cur.expect("end")?;
            SavedModel::Lda(LdaModel {
                k,
                alpha,
                beta,
                phi,
                theta_train,
                topic_word_counts,
                topic_counts,
                seed,
                n_iters,
            })
        }
        other => return Err(ModelIoError::UnknownModelType(other.to_string())),
    };
    Ok(ModelFile { vocab_hash, model })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{bow_matrix, build_vocabulary, tfidf_weight};
    use crate::lda::{default_alpha, train_lda};
    use crate::lsa::train_lsa;
    use crate::nmf::train_nmf;
    use crate::preprocess::TokenizedDoc;

    fn small_docs() -> Vec<TokenizedDoc> {
        let texts = [
            ("a", "yoga health breath health"),
            ("b", "yoga breath calm calm calm"),
            ("c", "data model data topic"),
            ("d", "model topic topic data yoga"),
            ("e", "health calm data topic breath"),
        ];
        texts
            .iter()
            .map(|(id, text)| TokenizedDoc {
                doc_id: id.to_string(),
                tokens: text.split_whitespace().map(|t| t.to_string()).collect(),
            })
            .collect()
    }

    #[test]
    fn lda_file_round_trips_bit_exactly() {
        let docs = small_docs();
        let vocab = build_vocabulary(&docs, 1, 1.0).unwrap();
        let bow = bow_matrix(&docs, &vocab);
        let model = train_lda(&bow, 2, default_alpha(2), 0.01, 50, 9).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.tlab");
        save_lda(&model, &vocab.content_hash(), &path).unwrap();
        let file = load_model(&path).unwrap();

        assert_eq!(file.vocab_hash, vocab.content_hash());
        let loaded = match file.model {
            SavedModel::Lda(m) => m,
            other => panic!("wrong kind {}", other.kind()),
        };
        assert_eq!(loaded.k, model.k);
        assert_eq!(loaded.alpha, model.alpha);
        assert_eq!(loaded.beta, model.beta);
        assert_eq!(loaded.seed, model.seed);
        assert_eq!(loaded.n_iters, model.n_iters);
        assert_eq!(loaded.topic_counts, model.topic_counts);
        assert_eq!(loaded.topic_word_counts, model.topic_word_counts);
        assert_eq!(loaded.phi, model.phi);
        assert_eq!(loaded.theta_train, model.theta_train);
    }

    #[test]
    fn saving_twice_produces_identical_bytes() {
        let docs = small_docs();
        let vocab = build_vocabulary(&docs, 1, 1.0).unwrap();
        let bow = bow_matrix(&docs, &vocab);
        let model = train_lda(&bow, 2, default_alpha(2), 0.01, 30, 4).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("one.tlab");
        let p2 = dir.path().join("two.tlab");
        save_lda(&model, &vocab.content_hash(), &p1).unwrap();
        save_lda(&model, &vocab.content_hash(), &p2).unwrap();
        assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
    }

    #[test]
    fn lsa_file_round_trips_term_side() {
        let docs = small_docs();
        let vocab = build_vocabulary(&docs, 1, 1.0).unwrap();
        let bow = bow_matrix(&docs, &vocab);
        let tfidf = tfidf_weight(&bow, &vocab);
        let model = train_lsa(&tfidf, 2, 11).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.tlab");
        save_lsa(&model, &vocab.content_hash(), &path).unwrap();
        let file = load_model(&path).unwrap();
        let loaded = match file.model {
            SavedModel::Lsa(m) => m,
            other => panic!("wrong kind {}", other.kind()),
        };
        assert_eq!(loaded.k, model.k);
        assert_eq!(loaded.seed, model.seed);
        assert_eq!(loaded.singular_values, model.singular_values);
        assert_eq!(loaded.term_loadings, model.term_loadings);
        assert_eq!(loaded.doc_projections.nrows(), 0);
    }

    #[test]
    fn nmf_file_round_trips_with_and_without_w() {
        let docs = small_docs();
        let vocab = build_vocabulary(&docs, 1, 1.0).unwrap();
        let bow = bow_matrix(&docs, &vocab);
        let tfidf = tfidf_weight(&bow, &vocab);
        let model = train_nmf(&tfidf, 2, 40, 1e-6, 3).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let slim = dir.path().join("slim.tlab");
        let full = dir.path().join("full.tlab");
        save_nmf(&model, &vocab.content_hash(), false, &slim).unwrap();
        save_nmf(&model, &vocab.content_hash(), true, &full).unwrap();

        let slim = match load_model(&slim).unwrap().model {
            SavedModel::Nmf(m) => m,
            other => panic!("wrong kind {}", other.kind()),
        };
        assert_eq!(slim.h, model.h);
        assert_eq!(slim.w.nrows(), 0);
        assert_eq!(
            slim.objective_trace,
            vec![
                *model.objective_trace.first().unwrap(),
                *model.objective_trace.last().unwrap()
            ]
        );

        let full = match load_model(&full).unwrap().model {
            SavedModel::Nmf(m) => m,
            other => panic!("wrong kind {}", other.kind()),
        };
        assert_eq!(full.w, model.w);
        assert_eq!(full.n_iters, model.n_iters);
    }

    #[test]
    fn wrong_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.tlab");
        fs::write(&path, "NOPE\nmodel = lda\n").unwrap();
        let err = load_model(&path).unwrap_err();
        assert!(matches!(err, ModelIoError::BadMagic(ref m) if m == "NOPE"));
    }

    #[test]
    fn unknown_model_type_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("odd.tlab");
        fs::write(&path, "TLAB1\nmodel = svm\nvocab_hash = abc\nend\n").unwrap();
        let err = load_model(&path).unwrap_err();
        assert!(matches!(err, ModelIoError::UnknownModelType(ref m) if m == "svm"));
    }

    #[test]
    fn truncated_file_is_rejected_with_line_number() {
        let docs = small_docs();
        let vocab = build_vocabulary(&docs, 1, 1.0).unwrap();
        let bow = bow_matrix(&docs, &vocab);
        let model = train_lda(&bow, 2, default_alpha(2), 0.01, 20, 2).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.tlab");
        save_lda(&model, &vocab.content_hash(), &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let kept: Vec<&str> = text.lines().collect();
        let cut = kept[..kept.len() - 3].join("\n");
        fs::write(&path, cut).unwrap();
        let err = load_model(&path).unwrap_err();
        assert!(matches!(err, ModelIoError::Malformed { line, .. } if line > 0));
    }

    #[test]
    fn corrupted_number_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.tlab");
        fs::write(
            &path,
            "TLAB1\nmodel = lsa\nvocab_hash = abc\nk = two\n",
        )
        .unwrap();
        let err = load_model(&path).unwrap_err();
        match err {
            ModelIoError::Malformed { line, message } => {
                assert_eq!(line, 4);
                assert!(message.contains("two"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }
}
