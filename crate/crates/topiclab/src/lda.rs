//! Latent Dirichlet allocation trained by collapsed Gibbs sampling, with
//! fold-in inference for new documents and dominant-topic extraction.

use crate::corpus::SparseDocTermMatrix;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use thiserror::Error;

pub const DEFAULT_BETA: f64 = 0.01;
pub const DEFAULT_TRAIN_ITERS: usize = 1000;
pub const DEFAULT_INFER_ITERS: usize = 100;

/// The classic symmetric prior 50/k.
pub fn default_alpha(k: usize) -> f64 {
    50.0 / k as f64
}

#[derive(Debug, Error)]
pub enum LdaError {
    #[error("corpus has no documents")]
    EmptyCorpus,
    #[error("term id {term_id} outside the model vocabulary of size {m}")]
    VocabularyMismatch { term_id: usize, m: usize },
}

#[derive(Debug, Clone)]
pub struct LdaModel {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    /// k x m topic-word distribution; rows sum to 1, all entries positive.
    pub phi: Array2<f64>,
    /// n x k document-topic distribution for the training corpus.
    pub theta_train: Array2<f64>,
    /// k x m final sampler counts.
    pub topic_word_counts: Array2<u64>,
    /// Per-topic totals; topic_counts[t] = sum of topic_word_counts[t].
    pub topic_counts: Vec<u64>,
    pub seed: u64,
    pub n_iters: usize,
}

/// Per-document token list expanded from sparse counts, ids ascending.
fn expand_docs(bow: &SparseDocTermMatrix, m: usize) -> Result<Vec<Vec<u32>>, LdaError> {
    let mut docs = Vec::with_capacity(bow.n_rows);
    for row in bow.rows() {
        let mut tokens = Vec::new();
        for &(term, count) in row {
            if term >= m {
                return Err(LdaError::VocabularyMismatch { term_id: term, m });
            }
            assert!(
                count > 0.0 && count.fract() == 0.0,
                "counts must be positive integers, got {count}"
            );
            for _ in 0..count as u64 {
                tokens.push(term as u32);
            }
        }
        docs.push(tokens);
    }
    Ok(docs)
}

/// Collapsed Gibbs sampling: each sweep resamples every token from
/// p(z = t) proportional to (n_dt + alpha) * (n_tw + beta) / (n_t + m beta)
/// with the token's own assignment removed. Point estimates are taken
/// from the final state.
pub fn train_lda(
    bow: &SparseDocTermMatrix,
    k: usize,
    alpha: f64,
    beta: f64,
    n_iters: usize,
    seed: u64,
) -> Result<LdaModel, LdaError> {
    assert!(k >= 1, "k must be at least 1");
    assert!(alpha > 0.0 && beta > 0.0, "priors must be positive");
    assert!(n_iters >= 1, "n_iters must be at least 1");
    if bow.n_rows == 0 {
        return Err(LdaError::EmptyCorpus);
    }
    let m = bow.n_cols;
    let docs = expand_docs(bow, m)?;
    let n = docs.len();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut n_dt = vec![0u32; n * k];
    let mut n_tw = vec![0u32; k * m];
    let mut n_t = vec![0u32; k];
    let mut z: Vec<Vec<u32>> = Vec::with_capacity(n);
    for (d, tokens) in docs.iter().enumerate() {
        let mut zs = Vec::with_capacity(tokens.len());
        for &w in tokens {
            let t = rng.gen_range(0..k);
            zs.push(t as u32);
            n_dt[d * k + t] += 1;
            n_tw[t * m + w as usize] += 1;
            n_t[t] += 1;
        }
        z.push(zs);
    }

    let m_beta = m as f64 * beta;
    let mut probs = vec![0.0f64; k];
    for _ in 0..n_iters {
        for d in 0..n {
            for i in 0..docs[d].len() {
                let w = docs[d][i] as usize;
                let old = z[d][i] as usize;
                n_dt[d * k + old] -= 1;
                n_tw[old * m + w] -= 1;
                n_t[old] -= 1;
                let mut total = 0.0;
                for t in 0..k {
                    let p = (n_dt[d * k + t] as f64 + alpha)
                        * (n_tw[t * m + w] as f64 + beta)
                        / (n_t[t] as f64 + m_beta);
                    probs[t] = p;
                    total += p;
                }
                let mut u = rng.gen::<f64>() * total;
                let mut new = k - 1;
                for (t, &p) in probs.iter().enumerate() {
                    if u < p {
                        new = t;
                        break;
                    }
                    u -= p;
                }
                z[d][i] = new as u32;
                n_dt[d * k + new] += 1;
                n_tw[new * m + w] += 1;
                n_t[new] += 1;
            }
        }
    }

    let phi = Array2::from_shape_fn((k, m), |(t, w)| {
        (n_tw[t * m + w] as f64 + beta) / (n_t[t] as f64 + m_beta)
    });
    let theta_train = Array2::from_shape_fn((n, k), |(d, t)| {
        let n_d = docs[d].len() as f64;
        (n_dt[d * k + t] as f64 + alpha) / (n_d + k as f64 * alpha)
    });
    let topic_word_counts =
        Array2::from_shape_fn((k, m), |(t, w)| n_tw[t * m + w] as u64);
    let topic_counts = n_t.iter().map(|&c| c as u64).collect();

    Ok(LdaModel {
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

/// Fold-in inference: the topic-word side is frozen at the trained phi
/// and only the new document's assignments are resampled.
pub fn infer_theta(
    model: &LdaModel,
    bow_doc: &[(usize, u64)],
    n_iters: usize,
    seed: u64,
) -> Result<Vec<f64>, LdaError> {
    assert!(n_iters >= 1, "n_iters must be at least 1");
    let k = model.k;
    let m = model.phi.ncols();
    let mut tokens = Vec::new();
    for &(term, count) in bow_doc {
        if term >= m {
            return Err(LdaError::VocabularyMismatch { term_id: term, m });
        }
        for _ in 0..count {
            tokens.push(term);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut n_dt = vec![0u32; k];
    let mut z = Vec::with_capacity(tokens.len());
    for _ in &tokens {
        let t = rng.gen_range(0..k);
        z.push(t);
        n_dt[t] += 1;
    }
    let mut probs = vec![0.0f64; k];
    for _ in 0..n_iters {
        for i in 0..tokens.len() {
            let w = tokens[i];
            let old = z[i];
            n_dt[old] -= 1;
            let mut total = 0.0;
            for t in 0..k {
                let p = (n_dt[t] as f64 + model.alpha) * model.phi[[t, w]];
                probs[t] = p;
                total += p;
            }
            let mut u = rng.gen::<f64>() * total;
            let mut new = k - 1;
            for (t, &p) in probs.iter().enumerate() {
                if u < p {
                    new = t;
                    break;
                }
                u -= p;
            }
            z[i] = new;
            n_dt[new] += 1;
        }
    }
    let n_d = tokens.len() as f64;
    Ok((0..k)
        .map(|t| (n_dt[t] as f64 + model.alpha) / (n_d + k as f64 * model.alpha))
        .collect())
}

/// Dominant and runner-up topic of one document.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicAssignment {
    pub doc_id: String,
    /// 0-indexed internally; displayed 1-indexed.
    pub dominant_topic: usize,
    /// Exact percentage, 0..100; rounded only at display time.
    pub dominant_pct: f64,
    pub second_topic: Option<usize>,
    pub second_pct: f64,
}

/// Argmax and runner-up of theta, ties broken toward the lowest index.
pub fn dominant_topics(theta: &[f64], doc_id: &str) -> TopicAssignment {
    assert!(!theta.is_empty());
    let sum: f64 = theta.iter().sum();
    assert!((sum - 1.0).abs() <= 1e-6, "theta sums to {sum}");
    let mut dominant = 0;
    for (t, &p) in theta.iter().enumerate() {
        if p > theta[dominant] {
            dominant = t;
        }
    }
    let mut second: Option<usize> = None;
    for (t, &p) in theta.iter().enumerate() {
        if t == dominant {
            continue;
        }
        match second {
            None => second = Some(t),
            Some(s) if p > theta[s] => second = Some(t),
            _ => {}
        }
    }
    TopicAssignment {
        doc_id: doc_id.to_string(),
        dominant_topic: dominant,
        dominant_pct: 100.0 * theta[dominant],
        second_topic: second,
        second_pct: second.map_or(0.0, |s| 100.0 * theta[s]),
    }
}

/// The n largest phi entries of one topic, descending, ties by ascending
/// id.
pub fn top_terms_lda(model: &LdaModel, topic: usize, n: usize) -> Vec<(usize, f64)> {
    assert!(topic < model.k, "topic {topic} out of range for k={}", model.k);
    let row = model.phi.row(topic);
    let mut terms: Vec<(usize, f64)> = row.iter().copied().enumerate().collect();
    terms.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    terms.truncate(n);
    terms
}

/// Sum over tokens of ln sum_t theta_dt phi_tw; rises as the sampler
/// settles.
pub fn corpus_log_likelihood(
    phi: &Array2<f64>,
    theta: &Array2<f64>,
    bow: &SparseDocTermMatrix,
) -> f64 {
    let mut total = 0.0;
    for (d, row) in bow.rows().enumerate() {
        for &(w, count) in row {
            let p: f64 = (0..phi.nrows()).map(|t| theta[[d, t]] * phi[[t, w]]).sum();
            total += count * p.ln();
        }
    }
    total
}

/// Writes `doc_id,dominant_topic,dominant_pct,second_topic,second_pct`
/// with topics 1-indexed and percentages rounded to integers; the second
/// fields are empty for single-topic models.
pub fn write_assignments(path: &Path, assignments: &[TopicAssignment]) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "doc_id,dominant_topic,dominant_pct,second_topic,second_pct")?;
    for a in assignments {
        match a.second_topic {
            Some(s) => writeln!(
                out,
                "{},{},{},{},{}",
                a.doc_id,
                a.dominant_topic + 1,
                a.dominant_pct.round() as i64,
                s + 1,
                a.second_pct.round() as i64
            )?,
            None => writeln!(
                out,
                "{},{},{},,",
                a.doc_id,
                a.dominant_topic + 1,
                a.dominant_pct.round() as i64
            )?,
        }
    }
    out.flush()
}

pub fn read_assignments(path: &Path) -> io::Result<Vec<TopicAssignment>> {
    let bad = |line: usize, what: &str| {
        io::Error::new(
            io::ErrorKind::InvalidData,
            format!("assignments line {line}: {what}"),
        )
    };
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        if line_no == 1 || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let [doc_id, dom, dom_pct, sec, sec_pct] = fields.as_slice() else {
            return Err(bad(line_no, "expected 5 fields"));
        };
        let dom: usize = dom.parse().map_err(|_| bad(line_no, "bad topic"))?;
        if dom == 0 {
            return Err(bad(line_no, "topics are 1-indexed"));
        }
        let dom_pct: f64 = dom_pct.parse().map_err(|_| bad(line_no, "bad pct"))?;
        let (second_topic, second_pct) = if sec.is_empty() {
            (None, 0.0)
        } else {
            let s: usize = sec.parse().map_err(|_| bad(line_no, "bad topic"))?;
            if s == 0 {
                return Err(bad(line_no, "topics are 1-indexed"));
            }
            (
                Some(s - 1),
                sec_pct.parse().map_err(|_| bad(line_no, "bad pct"))?,
            )
        };
        out.push(TopicAssignment {
            doc_id: doc_id.to_string(),
            dominant_topic: dom - 1,
            dominant_pct: dom_pct,
            second_topic,
            second_pct,
        });
    }
    Ok(out)
}
