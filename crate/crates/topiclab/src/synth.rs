//! Synthetic corpus generation with planted topics, used by the
//! acceptance checks and the examples.

use crate::corpus::Vocabulary;
use crate::eval::Annotation;
use crate::preprocess::TokenizedDoc;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub n_docs: usize,
    pub k: usize,
    pub vocab_size: usize,
    pub alpha: f64,
    pub min_len: usize,
    pub max_len: usize,
    /// Geometric decay of within-topic word probabilities; 1.0 makes
    /// each topic uniform over its support. Smaller values concentrate
    /// the mass on a few head words per topic, like natural text.
    pub decay: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_docs: 2000,
            k: 4,
            vocab_size: 500,
            alpha: 0.1,
            min_len: 40,
            max_len: 60,
            decay: 0.8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub docs: Vec<TokenizedDoc>,
    /// Planted dominant topic per document, 1-indexed.
    pub gold: Vec<Annotation>,
    /// k x vocab_size planted topic-word distribution.
    pub phi_star: Array2<f64>,
    /// n x k document-topic mixtures the documents were drawn from.
    pub theta: Array2<f64>,
}

/// Marsaglia-Tsang gamma sampling; shapes below 1 are boosted through
/// Gamma(a+1) * U^(1/a).
fn sample_gamma(rng: &mut ChaCha8Rng, shape: f64) -> f64 {
    assert!(shape > 0.0);
    if shape < 1.0 {
        let boost = sample_gamma(rng, shape + 1.0);
        let u: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
        return boost * u.powf(1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (3.0 * d.sqrt());
    loop {
        let x = standard_normal(rng);
        let v = (1.0 + c * x).powi(3);
        if v <= 0.0 {
            continue;
        }
        let u: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
        if u.ln() < 0.5 * x * x + d - d * v + d * v.ln() {
            return d * v;
        }
    }
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn sample_dirichlet(rng: &mut ChaCha8Rng, alpha: f64, k: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..k).map(|_| sample_gamma(rng, alpha)).collect();
    let total: f64 = draws.iter().sum();
    if total == 0.0 {
        return vec![1.0 / k as f64; k];
    }
    draws.iter().map(|g| g / total).collect()
}

/// Tokens are w000, w001, ... zero-padded to a fixed width so that
/// lexicographic vocabulary ids coincide with word indices.
pub fn word_token(index: usize, vocab_size: usize) -> String {
    let width = (vocab_size.saturating_sub(1)).to_string().len().max(3);
    format!("w{index:0width$}")
}

/// Each topic owns a contiguous block of the vocabulary (the last topic
/// takes any remainder) and is uniform over its block, so topic supports
/// are fully disjoint. Documents mix topics by a symmetric
/// Dirichlet(alpha) draw and have uniform random lengths.
pub fn generate(config: &SynthConfig, seed: u64) -> SyntheticCorpus {
    let SynthConfig {
        n_docs,
        k,
        vocab_size,
        alpha,
        min_len,
        max_len,
        decay,
    } = *config;
    assert!(k >= 1 && vocab_size >= k && n_docs >= 1);
    assert!(alpha > 0.0);
    assert!(1 <= min_len && min_len <= max_len);
    assert!(decay > 0.0 && decay <= 1.0);

    let block = vocab_size / k;
    let support_start = |t: usize| t * block;
    let support_len = |t: usize| if t == k - 1 { vocab_size - t * block } else { block };

    let mut phi_star = Array2::zeros((k, vocab_size));
    for t in 0..k {
        let len = support_len(t);
        let total: f64 = (0..len).map(|r| decay.powi(r as i32)).sum();
        for r in 0..len {
            phi_star[[t, support_start(t) + r]] = decay.powi(r as i32) / total;
        }
    }
    // Per-topic cumulative distributions for word draws.
    let cumulative: Vec<Vec<f64>> = (0..k)
        .map(|t| {
            let mut acc = 0.0;
            (0..support_len(t))
                .map(|r| {
                    acc += phi_star[[t, support_start(t) + r]];
                    acc
                })
                .collect()
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs = Vec::with_capacity(n_docs);
    let mut gold = Vec::with_capacity(n_docs);
    let mut theta = Array2::zeros((n_docs, k));
    for d in 0..n_docs {
        let mixture = sample_dirichlet(&mut rng, alpha, k);
        let len = rng.gen_range(min_len..=max_len);
        let mut tokens = Vec::with_capacity(len);
        for _ in 0..len {
            let mut u = rng.gen::<f64>();
            let mut topic = k - 1;
            for (t, &p) in mixture.iter().enumerate() {
                if u < p {
                    topic = t;
                    break;
                }
                u -= p;
            }
            let r = rng.gen::<f64>() * cumulative[topic].last().copied().unwrap_or(1.0);
            let rank = cumulative[topic]
                .partition_point(|&c| c <= r)
                .min(support_len(topic) - 1);
            tokens.push(word_token(support_start(topic) + rank, vocab_size));
        }
        let mut dominant = 0;
        for (t, &p) in mixture.iter().enumerate() {
            if p > mixture[dominant] {
                dominant = t;
            }
        }
        let doc_id = format!("synth{d:05}");
        gold.push(Annotation {
            doc_id: doc_id.clone(),
            label: dominant + 1,
        });
        docs.push(TokenizedDoc { doc_id, tokens });
        for (t, &p) in mixture.iter().enumerate() {
            theta[[d, t]] = p;
        }
    }

    SyntheticCorpus {
        docs,
        gold,
        phi_star,
        theta,
    }
}

impl SyntheticCorpus {
    /// The planted phi re-indexed by a built vocabulary's term ids, for
    /// comparing against a trained model. Words the corpus never sampled
    /// are absent from the vocabulary and are dropped.
    pub fn phi_star_for_vocab(&self, vocab: &Vocabulary) -> Array2<f64> {
        let k = self.phi_star.nrows();
        let vocab_size = self.phi_star.ncols();
        let mut out = Array2::zeros((k, vocab.len()));
        for w in 0..vocab_size {
            let token = word_token(w, vocab_size);
            if let Some(id) = vocab.id_of(&token) {
                for t in 0..k {
                    out[[t, id]] = self.phi_star[[t, w]];
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documents_respect_config_bounds() {
        let config = SynthConfig {
            n_docs: 50,
            k: 4,
            vocab_size: 100,
            alpha: 0.1,
            min_len: 10,
            max_len: 20,
            decay: 0.8,
        };
        let corpus = generate(&config, 3);
        assert_eq!(corpus.docs.len(), 50);
        assert_eq!(corpus.gold.len(), 50);
        for doc in &corpus.docs {
            assert!((10..=20).contains(&doc.tokens.len()));
            for tok in &doc.tokens {
                let idx: usize = tok[1..].parse().unwrap();
                assert!(idx < 100);
            }
        }
    }

    #[test]
    fn supports_are_disjoint_and_rows_normalized() {
        let config = SynthConfig {
            n_docs: 1,
            k: 3,
            vocab_size: 10,
            decay: 1.0,
            ..SynthConfig::default()
        };
        let corpus = generate(&config, 0);
        // 10 words over 3 topics: blocks of 3, 3 and 4.
        for t in 0..3 {
            let row_sum: f64 = corpus.phi_star.row(t).sum();
            assert!((row_sum - 1.0).abs() < 1e-12);
        }
        for w in 0..10 {
            let owners = (0..3).filter(|&t| corpus.phi_star[[t, w]] > 0.0).count();
            assert_eq!(owners, 1, "word {w} owned by {owners} topics");
        }
        assert_eq!(corpus.phi_star[[2, 9]], 0.25);
    }

    #[test]
    fn decay_shapes_the_word_distribution() {
        let config = SynthConfig {
            n_docs: 1,
            k: 2,
            vocab_size: 6,
            decay: 0.5,
            ..SynthConfig::default()
        };
        let corpus = generate(&config, 0);
        // Ranks 0..3 with decay 0.5 weigh 1, 1/2, 1/4 over a total of 7/4.
        assert!((corpus.phi_star[[0, 0]] - 4.0 / 7.0).abs() < 1e-12);
        assert!((corpus.phi_star[[0, 1]] - 2.0 / 7.0).abs() < 1e-12);
        assert!((corpus.phi_star[[0, 2]] - 1.0 / 7.0).abs() < 1e-12);
        assert!((corpus.phi_star[[1, 3]] - 4.0 / 7.0).abs() < 1e-12);
        for t in 0..2 {
            let row_sum: f64 = corpus.phi_star.row(t).sum();
            assert!((row_sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gold_labels_are_the_mixture_argmax() {
        let corpus = generate(
            &SynthConfig {
                n_docs: 30,
                vocab_size: 40,
                ..SynthConfig::default()
            },
            7,
        );
        for (d, annotation) in corpus.gold.iter().enumerate() {
            let row: Vec<f64> = corpus.theta.row(d).to_vec();
            let argmax = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            assert_eq!(annotation.label, argmax + 1);
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn sparse_mixtures_under_small_alpha() {
        let corpus = generate(
            &SynthConfig {
                n_docs: 200,
                vocab_size: 100,
                ..SynthConfig::default()
            },
            11,
        );
        // Dirichlet(0.1) mixtures are nearly one-hot on average.
        let mean_max: f64 = (0..200)
            .map(|d| {
                corpus
                    .theta
                    .row(d)
                    .iter()
                    .cloned()
                    .fold(f64::MIN, f64::max)
            })
            .sum::<f64>()
            / 200.0;
        assert!(mean_max > 0.8, "mean dominant mass {mean_max}");
    }

    #[test]
    fn generation_is_deterministic() {
        let config = SynthConfig {
            n_docs: 20,
            vocab_size: 60,
            ..SynthConfig::default()
        };
        let a = generate(&config, 5);
        let b = generate(&config, 5);
        assert_eq!(a.docs, b.docs);
        assert_eq!(a.theta, b.theta);
        let c = generate(&config, 6);
        assert!(a.docs != c.docs);
    }

    #[test]
    fn gamma_moments_are_sane() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for &shape in &[0.1, 0.5, 1.0, 3.5] {
            let n = 20000;
            let draws: Vec<f64> = (0..n).map(|_| sample_gamma(&mut rng, shape)).collect();
            let mean: f64 = draws.iter().sum::<f64>() / n as f64;
            let var: f64 =
                draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
            // Gamma(shape, 1) has mean = shape and variance = shape.
            assert!(
                (mean - shape).abs() < 0.1 * shape.max(0.5),
                "shape {shape}: mean {mean}"
            );
            assert!(
                (var - shape).abs() < 0.2 * shape.max(0.5),
                "shape {shape}: var {var}"
            );
            assert!(draws.iter().all(|&x| x > 0.0));
        }
    }

    #[test]
    fn phi_star_reindexing_follows_vocabulary_ids() {
        let corpus = generate(
            &SynthConfig {
                n_docs: 100,
                k: 2,
                vocab_size: 20,
                ..SynthConfig::default()
            },
            2,
        );
        let vocab = crate::corpus::build_vocabulary(&corpus.docs, 1, 1.0).unwrap();
        let mapped = corpus.phi_star_for_vocab(&vocab);
        assert_eq!(mapped.nrows(), 2);
        assert_eq!(mapped.ncols(), vocab.len());
        for id in 0..vocab.len() {
            let token = vocab.token(id);
            let word: usize = token[1..].parse().unwrap();
            for t in 0..2 {
                assert_eq!(mapped[[t, id]], corpus.phi_star[[t, word]]);
            }
        }
    }
}
