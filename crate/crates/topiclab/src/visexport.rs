//! Static export of a trained LDA model for interactive topic browsing.
//!
//! The export bundles everything a viewer needs: topic proportions, a 2-D
//! map of the topics, a global term list ranked by saliency and per-topic
//! term lists ranked by relevance. All quantities are derived from the
//! model's distributions, so estimated within-topic frequencies are always
//! consistent with the displayed corpus frequencies.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{SparseDocTermMatrix, Vocabulary};
use crate::lda::LdaModel;
use crate::linalg;

/// Default interpolation weight for relevance ranking.
pub const DEFAULT_LAMBDA: f64 = 0.6;
/// Number of terms kept in each ranked list (fewer when the vocabulary is smaller).
pub const TOP_TERMS: usize = 30;

#[derive(Debug, Error)]
pub enum VisError {
    #[error("vocabulary mismatch: model covers {model_terms} terms, corpus has {corpus_terms}")]
    VocabularyMismatch {
        model_terms: usize,
        corpus_terms: usize,
    },
    #[error("document mismatch: model was trained on {model_docs} documents, matrix has {corpus_docs}")]
    DocumentMismatch {
        model_docs: usize,
        corpus_docs: usize,
    },
    #[error("lambda must lie in [0, 1], got {0}")]
    InvalidLambda(f64),
    #[error("corpus contains no tokens")]
    EmptyCorpus,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed vis file: {0}")]
    Parse(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopicSummary {
    /// 1-indexed topic id.
    pub id: usize,
    /// Share of all corpus tokens attributed to this topic.
    pub proportion: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DefaultTerm {
    pub token: String,
    pub saliency: f64,
    pub corpus_frequency: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopicTerm {
    pub token: String,
    pub relevance: f64,
    pub estimated_frequency: f64,
    pub corpus_frequency: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VisExport {
    pub lambda: f64,
    pub topics: Vec<TopicSummary>,
    pub default_terms: Vec<DefaultTerm>,
    /// One list per topic, aligned with `topics`.
    pub per_topic_terms: Vec<Vec<TopicTerm>>,
}

/// Jensen-Shannon divergence between two probability vectors, in nats.
///
/// Symmetric, zero for identical inputs and at most ln 2 (reached by
/// distributions with disjoint support).
pub fn js_divergence(p: ArrayView1<f64>, q: ArrayView1<f64>) -> f64 {
    assert_eq!(p.len(), q.len(), "distributions must have equal length");
    let mut total = 0.0;
    for (&pi, &qi) in p.iter().zip(q.iter()) {
        let m = 0.5 * (pi + qi);
        if pi > 0.0 {
            total += 0.5 * pi * (pi / m).ln();
        }
        if qi > 0.0 {
            total += 0.5 * qi * (qi / m).ln();
        }
    }
    total.max(0.0)
}

/// Classical MDS of a symmetric distance matrix down to two dimensions.
///
/// Returns one (x, y) pair per row of `dist`. Coordinates are centered and
/// each axis is oriented so that its first nonzero entry is positive.
fn mds_2d(dist: &Array2<f64>) -> Vec<(f64, f64)> {
    let k = dist.nrows();
    let mut b = Array2::<f64>::zeros((k, k));
    for i in 0..k {
        for j in 0..k {
            b[[i, j]] = -0.5 * dist[[i, j]] * dist[[i, j]];
        }
    }
    // Double centering: B = J A J with J = I - (1/k) 11^T.
    let row_means: Vec<f64> = (0..k).map(|i| b.row(i).mean().unwrap()).collect();
    let col_means: Vec<f64> = (0..k).map(|j| b.column(j).mean().unwrap()).collect();
    let grand = row_means.iter().sum::<f64>() / k as f64;
    for i in 0..k {
        for j in 0..k {
            b[[i, j]] = b[[i, j]] - row_means[i] - col_means[j] + grand;
        }
    }
    let (vals, vecs) = linalg::sym_eigen(&b);
    let mut coords = vec![(0.0, 0.0); k];
    for axis in 0..2.min(k) {
        let scale = vals[axis].max(0.0).sqrt();
        let mut column: Vec<f64> = (0..k).map(|i| vecs[[i, axis]] * scale).collect();
        if let Some(first) = column.iter().find(|v| v.abs() > 1e-12) {
            if *first < 0.0 {
                for v in column.iter_mut() {
                    *v = -*v;
                }
            }
        }
        for i in 0..k {
            if axis == 0 {
                coords[i].0 = column[i];
            } else {
                coords[i].1 = column[i];
            }
        }
    }
    coords
}

/// Builds the full visualization export for a trained model.
///
/// `bow` must be the bag-of-words matrix the model was trained on and
/// `vocab` the vocabulary both were built from. Term frequencies are the
/// model's own estimates scaled to the corpus token count, which keeps every
/// within-topic frequency at or below the term's overall frequency.
pub fn export_vis(
    model: &LdaModel,
    bow: &SparseDocTermMatrix,
    vocab: &Vocabulary,
    lambda: f64,
) -> Result<VisExport, VisError> {
    let k = model.k;
    let m = vocab.len();
    if model.phi.ncols() != m || bow.n_cols != m {
        return Err(VisError::VocabularyMismatch {
            model_terms: model.phi.ncols(),
            corpus_terms: if bow.n_cols != m { bow.n_cols } else { m },
        });
    }
    if model.theta_train.nrows() != bow.n_rows {
        return Err(VisError::DocumentMismatch {
            model_docs: model.theta_train.nrows(),
            corpus_docs: bow.n_rows,
        });
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(VisError::InvalidLambda(lambda));
    }

    let doc_lengths: Vec<f64> = (0..bow.n_rows)
        .map(|d| bow.row(d).iter().map(|&(_, c)| c).sum::<f64>())
        .collect();
    let total_tokens: f64 = doc_lengths.iter().sum();
    if total_tokens <= 0.0 {
        return Err(VisError::EmptyCorpus);
    }

    let mut proportions = Array1::<f64>::zeros(k);
    for d in 0..bow.n_rows {
        for t in 0..k {
            proportions[t] += model.theta_train[[d, t]] * doc_lengths[d];
        }
    }
    proportions.mapv_inplace(|v| v / total_tokens);

    // Marginal term probability under the model.
    let mut term_prob = vec![0.0f64; m];
    for t in 0..k {
        for w in 0..m {
            term_prob[w] += proportions[t] * model.phi[[t, w]];
        }
    }

    let mut dist = Array2::<f64>::zeros((k, k));
    for a in 0..k {
        for b in (a + 1)..k {
            let d = js_divergence(model.phi.row(a), model.phi.row(b));
            dist[[a, b]] = d;
            dist[[b, a]] = d;
        }
    }
    let coords = mds_2d(&dist);

    let topics = (0..k)
        .map(|t| TopicSummary {
            id: t + 1,
            proportion: proportions[t],
            x: coords[t].0,
            y: coords[t].1,
        })
        .collect();

    let mut saliency = vec![0.0f64; m];
    for w in 0..m {
        let mut acc = 0.0;
        let mut check = 0.0;
        for t in 0..k {
            let p_t_given_w = model.phi[[t, w]] * proportions[t] / term_prob[w];
            check += p_t_given_w;
            if p_t_given_w > 0.0 {
                acc += p_t_given_w * (p_t_given_w / proportions[t]).ln();
            }
        }
        debug_assert!((check - 1.0).abs() < 1e-9, "p(t|w) must sum to 1");
        saliency[w] = term_prob[w] * acc;
    }

    let n_terms = TOP_TERMS.min(m);
    let mut by_saliency: Vec<usize> = (0..m).collect();
    by_saliency.sort_by(|&a, &b| saliency[b].partial_cmp(&saliency[a]).unwrap().then(a.cmp(&b)));
    let default_terms = by_saliency
        .iter()
        .take(n_terms)
        .map(|&w| DefaultTerm {
            token: vocab.token(w).to_string(),
            saliency: saliency[w],
            corpus_frequency: term_prob[w] * total_tokens,
        })
        .collect();

    let mut per_topic_terms = Vec::with_capacity(k);
    for t in 0..k {
        let relevance: Vec<f64> = (0..m)
            .map(|w| {
                let phi = model.phi[[t, w]];
                lambda * phi.ln() + (1.0 - lambda) * (phi / term_prob[w]).ln()
            })
            .collect();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| relevance[b].partial_cmp(&relevance[a]).unwrap().then(a.cmp(&b)));
        per_topic_terms.push(
            order
                .iter()
                .take(n_terms)
                .map(|&w| TopicTerm {
                    token: vocab.token(w).to_string(),
                    relevance: relevance[w],
                    estimated_frequency: model.phi[[t, w]] * proportions[t] * total_tokens,
                    corpus_frequency: term_prob[w] * total_tokens,
                })
                .collect(),
        );
    }

    Ok(VisExport {
        lambda,
        topics,
        default_terms,
        per_topic_terms,
    })
}

/// Writes the export as pretty-printed JSON.
///
/// The file appears atomically: content goes to a sibling temp file first and
/// is renamed over the target, so a failed write never leaves a partial file
/// at `path`.
pub fn write_vis_file(vis: &VisExport, path: &Path) -> Result<(), VisError> {
    let json = serde_json::to_string_pretty(vis)?;
    let tmp = match path.file_name() {
        Some(name) => {
            let mut n = name.to_os_string();
            n.push(".tmp");
            path.with_file_name(n)
        }
        None => {
            return Err(VisError::Io(std::io::Error::new(
                std::io::ErrorKind::InvalidInput,
                "path has no file name",
            )))
        }
    };
    if let Err(e) = fs::write(&tmp, json.as_bytes()) {
        let _ = fs::remove_file(&tmp);
        return Err(VisError::Io(e));
    }
    if let Err(e) = fs::rename(&tmp, path) {
        let _ = fs::remove_file(&tmp);
        return Err(VisError::Io(e));
    }
    Ok(())
}

pub fn read_vis_file(path: &Path) -> Result<VisExport, VisError> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
