//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{Cholesky, DMatrix, DVector};

pub type Matrix = DMatrix<f64>;

/// Relative reconstruction residual above which an SVD is recomputed.
const SVD_RESIDUAL_TOL: f64 = 1e-13;

/// `‖U diag(s) Vᵀ − A‖_F / ‖A‖_F`, or `None` when a factor is missing.
fn svd_residual(a: &Matrix, svd: &nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>) -> Option<f64> {
    let norm = a.norm();
    let (u, vt) = (svd.u.as_ref()?, svd.v_t.as_ref()?);
    let mut us = u.clone();
    for (j, &sj) in svd.singular_values.iter().enumerate() {
        us.column_mut(j).scale_mut(sj);
    }
    let rec = us * vt;
    Some(if norm > 0.0 { (rec - a).norm() / norm } else { rec.norm() })
}

/// The backend's default convergence test can stop early on rank-deficient
/// input and leave residuals near 1e-9. Such results are redone with a much
/// tighter threshold and the more accurate factorization is kept.
fn accurate_svd(a: &Matrix) -> nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn> {
    let svd = a.clone().svd(true, true);
    let res = svd_residual(a, &svd).unwrap_or(f64::INFINITY);
    if res <= SVD_RESIDUAL_TOL {
        return svd;
    }
    let max_iters = 1000 * a.nrows().max(a.ncols());
    match a.clone().try_svd(true, true, 1e-20, max_iters) {
        Some(tight) if svd_residual(a, &tight).is_some_and(|r| r < res) => tight,
        _ => svd,
    }
}

/// Thin SVD with singular values sorted in non-increasing order.
///
/// Returns `(u, s, v_t)` with `u: rows × k`, `s: k`, `v_t: k × cols`, `k = min(rows, cols)`.
pub fn sorted_svd(a: &Matrix) -> (Matrix, Vec<f64>, Matrix) {
    let (rows, cols) = a.shape();
    let k = rows.min(cols);
    if k == 0 {
        return (Matrix::zeros(rows, 0), Vec::new(), Matrix::zeros(0, cols));
    }
    let svd = accurate_svd(a);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let s = svd.singular_values;
    let mut order: Vec<usize> = (0..k).collect();
    // stable sort keeps the backend order for ties
    order.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).unwrap_or(std::cmp::Ordering::Equal));
    let mut u_sorted = Matrix::zeros(rows, k);
    let mut vt_sorted = Matrix::zeros(k, cols);
    let mut s_sorted = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        u_sorted.set_column(dst, &u.column(src));
        vt_sorted.set_row(dst, &v_t.row(src));
        s_sorted.push(s[src]);
    }
    (u_sorted, s_sorted, vt_sorted)
}

pub fn singular_values(a: &Matrix) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = a.singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    s
}

/// Number of singular values above `rel_tol * sigma_1`.
pub fn numerical_rank(a: &Matrix, rel_tol: f64) -> usize {
    let s = singular_values(a);
    match s.first() {
        Some(&top) if top > 0.0 => s.iter().filter(|&&v| v > rel_tol * top).count(),
        _ => 0,
    }
}

/// Replaces numerically dependent columns of `q` by unit vectors orthogonal to
/// the others. Columns are processed left to right with two passes of
/// modified Gram–Schmidt; candidates are drawn from the identity in order.
pub fn complete_orthonormal(q: &mut Matrix) {
    let (rows, cols) = q.shape();
    assert!(cols <= rows, "cannot fit {cols} orthonormal columns in R^{rows}");
    let mut next_unit = 0usize;
    for j in 0..cols {
        let mut v: DVector<f64> = q.column(j).into_owned();
        let orig = v.norm();
        orthogonalize_against(&mut v, q, j);
        let mut n = v.norm();
        if !(n > 1e-10 * orig.max(1.0)) || !n.is_finite() {
            loop {
                assert!(next_unit < rows, "ran out of unit vectors");
                let mut e = DVector::zeros(rows);
                e[next_unit] = 1.0;
                next_unit += 1;
                orthogonalize_against(&mut e, q, j);
                let en = e.norm();
                if en > 1e-6 {
                    v = e;
                    n = en;
                    break;
                }
            }
        }
        q.set_column(j, &(v / n));
    }
}

fn orthogonalize_against(v: &mut DVector<f64>, q: &Matrix, upto: usize) {
    for _ in 0..2 {
        for k in 0..upto {
            let c = q.column(k);
            let proj = c.dot(v);
            v.axpy(-proj, &c, 1.0);
        }
    }
}

/// Thin QR with `min(rows, cols)` columns in `Q`; `Q` is always orthonormal,
/// even for rank-deficient input.
pub fn thin_qr(a: &Matrix) -> (Matrix, Matrix) {
    let mut q = a.clone().qr().q();
    complete_orthonormal(&mut q);
    // R is taken against the repaired Q so that Q·R reproduces A
    let r = q.transpose() * a;
    (q, r)
}

/// Solves `X · S = B` for symmetric positive (semi-)definite `S`.
///
/// When the Cholesky factorization fails, a diagonal jitter of
/// `1e-14 · trace(S) / n` is added (growing tenfold until success).
pub fn solve_spd_right(b: &Matrix, s: &Matrix) -> Matrix {
    let n = s.nrows();
    if n == 0 {
        return b.clone();
    }
    let sym = (s + s.transpose()) * 0.5;
    if let Some(ch) = Cholesky::new(sym.clone()) {
        return ch.solve(&b.transpose()).transpose();
    }
    let trace = sym.trace().abs();
    let mut jitter = 1e-14 * if trace > 0.0 { trace / n as f64 } else { 1.0 };
    loop {
        let mut shifted = sym.clone();
        for i in 0..n {
            shifted[(i, i)] += jitter;
        }
        if let Some(ch) = Cholesky::new(shifted) {
            return ch.solve(&b.transpose()).transpose();
        }
        jitter *= 10.0;
    }
}

pub fn gram_deviation(q: &Matrix) -> f64 {
    let g = q.transpose() * q;
    (g - Matrix::identity(q.ncols(), q.ncols())).amax()
}
