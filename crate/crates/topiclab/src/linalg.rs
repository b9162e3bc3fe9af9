//! Small dense linear-algebra kernels shared by the factorization models:
//! modified Gram-Schmidt QR, one-sided Jacobi SVD, a symmetric Jacobi
//! eigensolver and products between the sparse corpus matrix and dense
//! blocks.

use crate::corpus::SparseDocTermMatrix;
use ndarray::{Array1, Array2};
use rand::Rng;

/// One standard-normal draw via Box-Muller.
pub(crate) fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub(crate) fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| standard_normal(rng))
}

/// Thin QR by modified Gram-Schmidt with one re-orthogonalization pass.
/// Columns that vanish numerically are replaced by zero columns so the
/// caller still gets a full-width Q.
pub(crate) fn qr_thin(a: &Array2<f64>) -> Array2<f64> {
    let (n, p) = a.dim();
    let mut q = a.clone();
    for j in 0..p {
        for _ in 0..2 {
            for i in 0..j {
                let qi = q.column(i).to_owned();
                let r = qi.dot(&q.column(j));
                let mut col = q.column_mut(j);
                col.scaled_add(-r, &qi);
            }
        }
        let norm = q.column(j).dot(&q.column(j)).sqrt();
        let mut col = q.column_mut(j);
        if norm > 1e-300 {
            col.mapv_inplace(|v| v / norm);
        } else {
            col.fill(0.0);
        }
    }
    debug_assert_eq!(q.dim(), (n, p));
    q
}

/// Thin SVD `M = U diag(S) Vt` with singular values sorted descending.
/// One-sided Jacobi on the columns of the (possibly transposed) input, so
/// the cost is quadratic only in min(rows, cols).
pub(crate) fn svd(m: &Array2<f64>) -> (Array2<f64>, Array1<f64>, Array2<f64>) {
    let (rows, cols) = m.dim();
    if rows < cols {
        let (u, s, vt) = svd_tall(&m.t().to_owned());
        return (vt.t().to_owned(), s, u.t().to_owned());
    }
    svd_tall(m)
}

/// SVD of a tall (rows >= cols) matrix by one-sided Jacobi.
fn svd_tall(m: &Array2<f64>) -> (Array2<f64>, Array1<f64>, Array2<f64>) {
    let (rows, cols) = m.dim();
    let mut w = m.clone();
    let mut v = Array2::<f64>::eye(cols);
    let tol = 1e-14;
    for _ in 0..60 {
        let mut rotated = false;
        for i in 0..cols {
            for j in (i + 1)..cols {
                let wi = w.column(i).to_owned();
                let wj = w.column(j).to_owned();
                let alpha = wi.dot(&wi);
                let beta = wj.dot(&wj);
                let gamma = wi.dot(&wj);
                if alpha * beta == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..rows {
                    let a = w[[r, i]];
                    let b = w[[r, j]];
                    w[[r, i]] = c * a - s * b;
                    w[[r, j]] = s * a + c * b;
                }
                for r in 0..cols {
                    let a = v[[r, i]];
                    let b = v[[r, j]];
                    v[[r, i]] = c * a - s * b;
                    v[[r, j]] = s * a + c * b;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..cols).collect();
    let norms: Vec<f64> = (0..cols)
        .map(|j| w.column(j).dot(&w.column(j)).sqrt())
        .collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap().then(a.cmp(&b)));
    let mut u = Array2::<f64>::zeros((rows, cols));
    let mut s = Array1::<f64>::zeros(cols);
    let mut vt = Array2::<f64>::zeros((cols, cols));
    for (out, &src) in order.iter().enumerate() {
        let sigma = norms[src];
        s[out] = sigma;
        if sigma > 1e-300 {
            let col = w.column(src).mapv(|x| x / sigma);
            u.column_mut(out).assign(&col);
        }
        vt.row_mut(out).assign(&v.column(src));
    }
    (u, s, vt)
}

/// Eigendecomposition of a symmetric matrix by the classical two-sided
/// Jacobi method. Returns eigenvalues descending with matching
/// eigenvectors as columns.
pub(crate) fn sym_eigen(m: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "matrix must be square");
    let mut a = m.clone();
    let mut v = Array2::<f64>::eye(n);
    for _ in 0..100 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(a[[i, j]].abs());
            }
        }
        if off < 1e-14 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[[p, q]].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * a[[p, q]]);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..n {
                    let arp = a[[r, p]];
                    let arq = a[[r, q]];
                    a[[r, p]] = c * arp - s * arq;
                    a[[r, q]] = s * arp + c * arq;
                }
                for col in 0..n {
                    let apc = a[[p, col]];
                    let aqc = a[[q, col]];
                    a[[p, col]] = c * apc - s * aqc;
                    a[[q, col]] = s * apc + c * aqc;
                }
                for r in 0..n {
                    let vrp = v[[r, p]];
                    let vrq = v[[r, q]];
                    v[[r, p]] = c * vrp - s * vrq;
                    v[[r, q]] = s * vrp + c * vrq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[[i, i]]).collect();
    order.sort_by(|&x, &y| diag[y].partial_cmp(&diag[x]).unwrap().then(x.cmp(&y)));
    let mut values = Array1::<f64>::zeros(n);
    let mut vectors = Array2::<f64>::zeros((n, n));
    for (out, &src) in order.iter().enumerate() {
        values[out] = diag[src];
        vectors.column_mut(out).assign(&v.column(src));
    }
    (values, vectors)
}

/// X (sparse, n x m) times a dense m x p block.
pub(crate) fn sparse_times_dense(x: &SparseDocTermMatrix, d: &Array2<f64>) -> Array2<f64> {
    assert_eq!(x.n_cols, d.nrows());
    let p = d.ncols();
    let mut out = Array2::<f64>::zeros((x.n_rows, p));
    for (i, row) in x.rows().enumerate() {
        for &(t, v) in row {
            let src = d.row(t);
            let mut dst = out.row_mut(i);
            dst.scaled_add(v, &src);
        }
    }
    out
}

/// X transposed (m x n) times a dense n x p block.
pub(crate) fn sparse_t_times_dense(x: &SparseDocTermMatrix, d: &Array2<f64>) -> Array2<f64> {
    assert_eq!(x.n_rows, d.nrows());
    let p = d.ncols();
    let mut out = Array2::<f64>::zeros((x.n_cols, p));
    for (i, row) in x.rows().enumerate() {
        let src = d.row(i);
        for &(t, v) in row {
            let mut dst = out.row_mut(t);
            dst.scaled_add(v, &src);
        }
    }
    out
}

/// Dense copy of the sparse matrix, for small-problem fallbacks.
pub(crate) fn to_dense(x: &SparseDocTermMatrix) -> Array2<f64> {
    let mut out = Array2::<f64>::zeros((x.n_rows, x.n_cols));
    for (i, row) in x.rows().enumerate() {
        for &(t, v) in row {
            out[[i, t]] = v;
        }
    }
    out
}

#[cfg(test)]
pub(crate) fn frobenius(m: &Array2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}
