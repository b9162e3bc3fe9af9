//! Non-negative matrix factorization by Frobenius multiplicative updates.

use crate::corpus::SparseDocTermMatrix;
use crate::linalg;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

const EPSILON: f64 = 1e-9;
pub const DEFAULT_MAX_ITERS: usize = 500;
pub const DEFAULT_TOL: f64 = 1e-5;

#[derive(Debug, Error)]
pub enum NmfError {
    #[error("input has a negative entry at row {row}, column {col}")]
    NegativeInput { row: usize, col: usize },
    #[error("k = {k} exceeds min({n_rows}, {n_cols})")]
    DimensionError { k: usize, n_rows: usize, n_cols: usize },
}

#[derive(Debug, Clone)]
pub struct NmfModel {
    pub k: usize,
    /// n x k document-topic weights, non-negative.
    pub w: Array2<f64>,
    /// k x m topic-term weights, non-negative; rows sum to 1 after the
    /// final rescaling (except all-zero rows).
    pub h: Array2<f64>,
    /// Objective 0.5 * ||V - WH||_F^2 recorded after every iteration.
    pub objective_trace: Vec<f64>,
    pub seed: u64,
    pub n_iters: usize,
}

/// Alternating multiplicative updates
/// H <- H .* (Wt V) ./ (Wt W H + eps), W <- W .* (V Ht) ./ (W H Ht + eps),
/// from seeded uniform(0,1) starts, stopping at `max_iters` or when the
/// relative objective decrease falls below `tol`. H rows are then scaled
/// to sum 1 with the scale folded into W.
pub fn train_nmf(
    v: &SparseDocTermMatrix,
    k: usize,
    max_iters: usize,
    tol: f64,
    seed: u64,
) -> Result<NmfModel, NmfError> {
    assert!(max_iters >= 1, "max_iters must be at least 1");
    assert!(tol > 0.0, "tol must be positive");
    let (n, m) = (v.n_rows, v.n_cols);
    for (row, entries) in v.rows().enumerate() {
        for &(col, value) in entries {
            if value < 0.0 {
                return Err(NmfError::NegativeInput { row, col });
            }
        }
    }
    if k == 0 || k > n.min(m) {
        return Err(NmfError::DimensionError {
            k,
            n_rows: n,
            n_cols: m,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = Array2::from_shape_fn((n, k), |_| rng.gen::<f64>());
    let mut h = Array2::from_shape_fn((k, m), |_| rng.gen::<f64>());
    let v_frob_sq = v.frob_sq();

    let mut trace = Vec::new();
    let mut prev: Option<f64> = None;
    for _ in 0..max_iters {
        // H update.
        let wt_v = linalg::sparse_t_times_dense(v, &w).t().to_owned();
        let wt_w = w.t().dot(&w);
        let denom_h = wt_w.dot(&h);
        ndarray::Zip::from(&mut h).and(&wt_v).and(&denom_h).for_each(
            |h_ij, &num, &den| *h_ij *= num / (den + EPSILON),
        );
        // W update.
        let v_ht = linalg::sparse_times_dense(v, &h.t().to_owned());
        let h_ht = h.dot(&h.t());
        let denom_w = w.dot(&h_ht);
        ndarray::Zip::from(&mut w).and(&v_ht).and(&denom_w).for_each(
            |w_ij, &num, &den| *w_ij *= num / (den + EPSILON),
        );

        let objective = objective_value(v, v_frob_sq, &w, &h);
        trace.push(objective);
        if let Some(p) = prev {
            if p - objective <= tol * p {
                break;
            }
        }
        prev = Some(objective);
    }

    // Scale H rows to sum 1, folding the scale into W so WH is unchanged.
    for topic in 0..k {
        let total: f64 = h.row(topic).sum();
        if total > 0.0 {
            h.row_mut(topic).mapv_inplace(|x| x / total);
            w.column_mut(topic).mapv_inplace(|x| x * total);
        }
    }

    Ok(NmfModel {
        k,
        w,
        h,
        n_iters: trace.len(),
        objective_trace: trace,
        seed,
    })
}

/// 0.5 * ||V - WH||_F^2 without materializing WH:
/// 0.5 * (||V||^2 - 2 <V, WH> + tr((Wt W)(H Ht))).
fn objective_value(v: &SparseDocTermMatrix, v_frob_sq: f64, w: &Array2<f64>, h: &Array2<f64>) -> f64 {
    let mut cross = 0.0;
    for (d, row) in v.rows().enumerate() {
        let w_row = w.row(d);
        for &(t, value) in row {
            cross += value * w_row.dot(&h.column(t));
        }
    }
    let wt_w = w.t().dot(w);
    let h_ht = h.dot(&h.t());
    let trace_term: f64 = wt_w.iter().zip(h_ht.iter()).map(|(a, b)| a * b).sum();
    0.5 * (v_frob_sq - 2.0 * cross + trace_term).max(0.0)
}

/// The n largest H entries of one topic, descending, ties by ascending id.
pub fn top_terms_nmf(model: &NmfModel, topic: usize, n: usize) -> Vec<(usize, f64)> {
    assert!(topic < model.k, "topic {topic} out of range for k={}", model.k);
    let row = model.h.row(topic);
    let mut terms: Vec<(usize, f64)> = row.iter().copied().enumerate().collect();
    terms.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    terms.truncate(n);
    terms
}

/// Number of distinct terms appearing in more than one topic's top-n
/// list; repeated keywords across topics hint that k is too large.
pub fn shared_top_term_count(model: &NmfModel, n: usize) -> usize {
    let mut seen = std::collections::BTreeMap::new();
    for topic in 0..model.k {
        for (term, _) in top_terms_nmf(model, topic, n) {
            *seen.entry(term).or_insert(0usize) += 1;
        }
    }
    seen.values().filter(|&&c| c > 1).count()
}
