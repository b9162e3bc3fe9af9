//! Latent semantic analysis: truncated SVD of the weighted document-term
//! matrix, randomized for large vocabularies and dense for small ones.

use crate::corpus::SparseDocTermMatrix;
use crate::linalg;
use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Problems small enough for the direct dense decomposition.
const DENSE_CUTOFF: usize = 64;
/// Extra random probe directions beyond k.
const OVERSAMPLE: usize = 10;
/// Power iterations sharpening the randomized range estimate.
const POWER_ITERS: usize = 2;

#[derive(Debug, Error)]
pub enum LsaError {
    #[error("k = {k} exceeds min({n_rows}, {n_cols})")]
    DimensionError { k: usize, n_rows: usize, n_cols: usize },
}

#[derive(Debug, Clone)]
pub struct LsaModel {
    pub k: usize,
    /// Non-increasing, all non-negative.
    pub singular_values: Vec<f64>,
    /// k x m; right singular vectors as rows, largest-magnitude entry of
    /// each row made positive.
    pub term_loadings: Array2<f64>,
    /// n x k; U scaled by the singular values.
    pub doc_projections: Array2<f64>,
    pub seed: u64,
}

/// Rank-k factorization X ~ U S Vt. Dense Jacobi SVD when min(n, m) is
/// small, otherwise a seeded randomized range finder with power
/// iterations.
pub fn train_lsa(x: &SparseDocTermMatrix, k: usize, seed: u64) -> Result<LsaModel, LsaError> {
    let (n, m) = (x.n_rows, x.n_cols);
    if k == 0 || k > n.min(m) {
        return Err(LsaError::DimensionError {
            k,
            n_rows: n,
            n_cols: m,
        });
    }
    let (u, s, vt) = if n.min(m) <= DENSE_CUTOFF {
        linalg::svd(&linalg::to_dense(x))
    } else {
        randomized_svd(x, k, seed)
    };
    let mut u_k = u.slice(ndarray::s![.., ..k]).to_owned();
    let s_k: Vec<f64> = s.iter().take(k).copied().collect();
    let mut vt_k = vt.slice(ndarray::s![..k, ..]).to_owned();
    fix_signs(&mut u_k, &mut vt_k);
    let mut doc_projections = u_k;
    for (j, sigma) in s_k.iter().enumerate() {
        doc_projections.column_mut(j).mapv_inplace(|v| v * sigma);
    }
    Ok(LsaModel {
        k,
        singular_values: s_k,
        term_loadings: vt_k,
        doc_projections,
        seed,
    })
}

fn randomized_svd(
    x: &SparseDocTermMatrix,
    k: usize,
    seed: u64,
) -> (Array2<f64>, Array1<f64>, Array2<f64>) {
    let (n, m) = (x.n_rows, x.n_cols);
    let l = (k + OVERSAMPLE).min(n.min(m));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = linalg::gaussian_matrix(&mut rng, m, l);
    let mut q = linalg::qr_thin(&linalg::sparse_times_dense(x, &omega));
    for _ in 0..POWER_ITERS {
        let z = linalg::qr_thin(&linalg::sparse_t_times_dense(x, &q));
        q = linalg::qr_thin(&linalg::sparse_times_dense(x, &z));
    }
    // T = Xt Q equals Bt for B = Qt X; the SVD of the small-width T gives
    // B's factors transposed.
    let t = linalg::sparse_t_times_dense(x, &q);
    let (u_t, s, vt_t) = linalg::svd(&t);
    let u = q.dot(&vt_t.t());
    let vt = u_t.t().to_owned();
    (u, s, vt)
}

/// Makes the largest-magnitude entry of every Vt row positive (first such
/// entry on ties), flipping the matching U column to keep the product.
fn fix_signs(u: &mut Array2<f64>, vt: &mut Array2<f64>) {
    for topic in 0..vt.nrows() {
        let row = vt.row(topic);
        let mut best = 0usize;
        for (i, v) in row.iter().enumerate() {
            if v.abs() > row[best].abs() {
                best = i;
            }
        }
        if row[best] < 0.0 {
            vt.row_mut(topic).mapv_inplace(|v| -v);
            u.column_mut(topic).mapv_inplace(|v| -v);
        }
    }
}

/// The n terms with largest absolute loading in one topic row, descending
/// by |loading| with ties broken by ascending id; reported with sign.
pub fn top_terms_lsa(model: &LsaModel, topic: usize, n: usize) -> Vec<(usize, f64)> {
    assert!(topic < model.k, "topic {topic} out of range for k={}", model.k);
    let row = model.term_loadings.row(topic);
    let mut terms: Vec<(usize, f64)> = row.iter().copied().enumerate().collect();
    terms.sort_by(|a, b| {
        b.1.abs()
            .partial_cmp(&a.1.abs())
            .unwrap()
            .then(a.0.cmp(&b.0))
    });
    terms.truncate(n);
    terms
}
