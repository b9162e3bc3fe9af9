//! Skip-gram word embeddings with negative sampling, trained directly on
//! the tokenized corpus.

use crate::preprocess::TokenizedDoc;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

pub const DEFAULT_DIM: usize = 100;
pub const DEFAULT_WINDOW: usize = 5;
pub const DEFAULT_NEGATIVES: usize = 5;
pub const DEFAULT_EPOCHS: usize = 5;
pub const DEFAULT_LR: f64 = 0.025;
const MIN_LR_FRACTION: f64 = 1e-4;
const NOISE_POWER: f64 = 0.75;

#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    pub dim: usize,
    pub vectors: BTreeMap<String, Vec<f64>>,
    pub context_vectors: BTreeMap<String, Vec<f64>>,
    pub seed: u64,
}

impl EmbeddingTable {
    /// Cosine similarity of two input vectors; None when either token is
    /// missing.
    pub fn cosine(&self, a: &str, b: &str) -> Option<f64> {
        let va = self.vectors.get(a)?;
        let vb = self.vectors.get(b)?;
        Some(super::cosine(va, vb))
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The objective for one center word: ln sigma(u_ctx . v) plus
/// ln sigma(-u_neg . v) over the negative samples. Training ascends this.
pub fn pair_objective(center: &[f64], context: &[f64], negatives: &[Vec<f64>]) -> f64 {
    let mut obj = sigmoid(dot(context, center)).ln();
    for neg in negatives {
        obj += sigmoid(-dot(neg, center)).ln();
    }
    obj
}

/// Analytic gradients of pair_objective with respect to the center,
/// context and negative vectors.
pub fn pair_gradients(
    center: &[f64],
    context: &[f64],
    negatives: &[Vec<f64>],
) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
    let dim = center.len();
    let mut g_center = vec![0.0; dim];
    let f = sigmoid(dot(context, center));
    let g_context: Vec<f64> = center.iter().map(|&v| (1.0 - f) * v).collect();
    for d in 0..dim {
        g_center[d] += (1.0 - f) * context[d];
    }
    let mut g_negs = Vec::with_capacity(negatives.len());
    for neg in negatives {
        let fn_ = sigmoid(dot(neg, center));
        g_negs.push(center.iter().map(|&v| -fn_ * v).collect());
        for d in 0..dim {
            g_center[d] -= fn_ * neg[d];
        }
    }
    (g_center, g_context, g_negs)
}

/// One pass of stochastic gradient ascent per (center, context) pair per
/// epoch; negatives come from the unigram^0.75 distribution. The learning
/// rate decays linearly over all center positions, floored at lr * 1e-4.
pub fn train_sgns(
    docs: &[TokenizedDoc],
    dim: usize,
    window: usize,
    negatives: usize,
    epochs: usize,
    lr: f64,
    seed: u64,
) -> EmbeddingTable {
    assert!(dim >= 1 && window >= 1 && negatives >= 1 && epochs >= 1);
    assert!(lr > 0.0);
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for doc in docs {
        for tok in &doc.tokens {
            *counts.entry(tok).or_insert(0) += 1;
        }
    }
    assert!(!counts.is_empty(), "corpus has no tokens");
    let tokens: Vec<&str> = counts.keys().copied().collect();
    let ids: BTreeMap<&str, usize> = tokens.iter().enumerate().map(|(i, &t)| (t, i)).collect();
    let vocab = tokens.len();

    let mut noise_cum = Vec::with_capacity(vocab);
    let mut total_weight = 0.0;
    for &t in &tokens {
        total_weight += (counts[t] as f64).powf(NOISE_POWER);
        noise_cum.push(total_weight);
    }

    let docs_ids: Vec<Vec<usize>> = docs
        .iter()
        .map(|doc| doc.tokens.iter().map(|t| ids[t.as_str()]).collect())
        .collect();
    let total_tokens: usize = docs_ids.iter().map(|d| d.len()).sum();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut input: Vec<f64> = (0..vocab * dim)
        .map(|_| (rng.gen::<f64>() - 0.5) / dim as f64)
        .collect();
    let mut output = vec![0.0f64; vocab * dim];

    let total_steps = (epochs * total_tokens) as f64;
    let mut step = 0usize;
    let mut g_center = vec![0.0f64; dim];
    for _ in 0..epochs {
        for doc in &docs_ids {
            for i in 0..doc.len() {
                let alpha = (lr * (1.0 - step as f64 / total_steps)).max(lr * MIN_LR_FRACTION);
                step += 1;
                let center = doc[i] * dim;
                let lo = i.saturating_sub(window);
                let hi = (i + window).min(doc.len() - 1);
                for j in lo..=hi {
                    if j == i {
                        continue;
                    }
                    let context = doc[j];
                    g_center.iter_mut().for_each(|g| *g = 0.0);
                    {
                        let ctx = context * dim;
                        let f = sigmoid(dot(&output[ctx..ctx + dim], &input[center..center + dim]));
                        let g = (1.0 - f) * alpha;
                        for d in 0..dim {
                            g_center[d] += g * output[ctx + d];
                            output[ctx + d] += g * input[center + d];
                        }
                    }
                    for _ in 0..negatives {
                        let r = rng.gen::<f64>() * total_weight;
                        let sample = noise_cum.partition_point(|&c| c <= r).min(vocab - 1);
                        if sample == context {
                            continue;
                        }
                        let neg = sample * dim;
                        let f = sigmoid(dot(&output[neg..neg + dim], &input[center..center + dim]));
                        let g = -f * alpha;
                        for d in 0..dim {
                            g_center[d] += g * output[neg + d];
                            output[neg + d] += g * input[center + d];
                        }
                    }
                    for d in 0..dim {
                        input[center + d] += g_center[d];
                    }
                }
            }
        }
    }

    let mut vectors = BTreeMap::new();
    let mut context_vectors = BTreeMap::new();
    for (&t, &id) in &ids {
        vectors.insert(t.to_string(), input[id * dim..(id + 1) * dim].to_vec());
        context_vectors.insert(t.to_string(), output[id * dim..(id + 1) * dim].to_vec());
    }
    EmbeddingTable {
        dim,
        vectors,
        context_vectors,
        seed,
    }
}
