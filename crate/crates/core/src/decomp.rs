//! TT-SVD, orthogonalization sweeps and the rank-`r` retraction.

use crate::error::{ensure, Result};
use crate::linalg::{self, Matrix};
use crate::tt_core::{carry_into_left, Core, DenseTensor, RankVector, TtTensor};

/// Largest `d*` for which the dense retraction path is allowed.
pub const DENSE_RETRACTION_LIMIT: usize = 1_000_000;

/// Sequential truncated SVD of the separations (TT-SVD).
///
/// Cores `1..m-1` of the result are left-orthogonal; the last core carries the
/// norm. Ranks of the output equal `r` exactly (directions belonging to zero
/// singular values are kept as orthonormal padding).
pub fn tt_svd(x: &DenseTensor, r: &RankVector) -> Result<TtTensor> {
    let dims = x.dims().to_vec();
    r.check_feasible(&dims)?;
    let m = dims.len();
    let mut cores = Vec::with_capacity(m);
    let mut rest: usize = x.len() / dims[0];
    let mut c = Matrix::from_column_slice(dims[0], rest, x.values());
    for i in 1..m {
        let ri = r.full(i);
        let left = r.full(i - 1);
        let (u, _, _) = linalg::sorted_svd(&c);
        let mut u_r = u.columns(0, ri).into_owned();
        linalg::complete_orthonormal(&mut u_r);
        cores.push(Core::from_left_unfold(left, dims[i - 1], &u_r)?);
        let projected = u_r.transpose() * &c;
        rest /= dims[i];
        c = Matrix::from_column_slice(ri * dims[i], rest, projected.as_slice());
    }
    cores.push(Core::new(r.full(m - 1), dims[m - 1], 1, c.as_slice().to_vec())?);
    TtTensor::new(cores)
}

/// QR sweep from the left: cores `1..m-1` become left-orthogonal, values are unchanged.
///
/// A rank that exceeds `r_{i-1}·d_i` is reduced to that bound.
pub fn left_orthogonalize(tt: &TtTensor) -> TtTensor {
    let m = tt.order();
    let mut cores: Vec<Core> = Vec::with_capacity(m);
    let mut carry = Matrix::from_element(1, 1, 1.0);
    for (k, core) in tt.cores().iter().enumerate() {
        let c = carry_into_left(&carry, core);
        if k == m - 1 {
            cores.push(c);
            break;
        }
        let (q, r) = linalg::thin_qr(&c.left_unfold());
        cores.push(Core::from_left_unfold(c.left_rank(), c.mode_size(), &q).expect("QR shape"));
        carry = r;
    }
    TtTensor::new(cores).expect("orthogonalization keeps a valid chain")
}

/// QR sweep from the right: `R(T_i)` has orthonormal rows for cores `2..m`.
pub fn right_orthogonalize(tt: &TtTensor) -> TtTensor {
    let m = tt.order();
    let mut cores: Vec<Core> = tt.cores().to_vec();
    for k in (1..m).rev() {
        let core = &cores[k];
        let (q, r) = linalg::thin_qr(&core.right_unfold().transpose());
        let new_core = Core::from_right_unfold(core.mode_size(), core.right_rank(), &q.transpose()).expect("QR shape");
        // T_{k-1} ← T_{k-1} ×_3 Rᵀ
        let prev = &cores[k - 1];
        let l = prev.left_unfold() * r.transpose();
        cores[k - 1] = Core::from_left_unfold(prev.left_rank(), prev.mode_size(), &l).expect("shape");
        cores[k] = new_core;
    }
    TtTensor::new(cores).expect("orthogonalization keeps a valid chain")
}

/// TT rounding: truncates a TT of any rank to exactly rank `r` without densifying.
///
/// Right-orthogonalizes, then sweeps left to right with truncated SVDs. In
/// exact arithmetic the result equals [`tt_svd`] of the dense tensor.
pub fn round(tt: &TtTensor, r: &RankVector) -> Result<TtTensor> {
    let dims = tt.dims();
    r.check_feasible(&dims)?;
    let m = dims.len();
    let mut work = right_orthogonalize(tt).into_cores();
    let mut out = Vec::with_capacity(m);
    for i in 1..m {
        let ri = r.full(i);
        let core = &work[i - 1];
        let (u, s, vt) = linalg::sorted_svd(&core.left_unfold());
        let keep = ri.min(s.len());
        let mut u_r = Matrix::zeros(u.nrows(), ri);
        u_r.columns_mut(0, keep).copy_from(&u.columns(0, keep));
        linalg::complete_orthonormal(&mut u_r);
        // carry = diag(s) Vᵀ restricted to kept rows, zero rows for padding
        let mut carry = Matrix::zeros(ri, vt.ncols());
        for j in 0..keep {
            carry.set_row(j, &(vt.row(j) * s[j]));
        }
        out.push(Core::from_left_unfold(core.left_rank(), core.mode_size(), &u_r)?);
        let next = carry_into_left(&carry, &work[i]);
        work[i] = next;
    }
    out.push(work.pop().expect("last core"));
    TtTensor::new(out)
}

/// How the retraction materializes the rank-≤2r candidate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum RetractionPath {
    /// Densify then TT-SVD; only for `d* ≤ DENSE_RETRACTION_LIMIT`, otherwise falls back to rounding.
    Dense,
    /// TT rounding on the cores.
    #[default]
    Structured,
}

/// Maps a point near the manifold back to TT rank `r`.
pub fn retract(w: &TtTensor, r: &RankVector, path: RetractionPath) -> Result<TtTensor> {
    match path {
        RetractionPath::Dense if w.num_entries() <= DENSE_RETRACTION_LIMIT => tt_svd(&w.to_dense()?, r),
        _ => round(w, r),
    }
}

pub fn retract_dense(w: &DenseTensor, r: &RankVector) -> Result<TtTensor> {
    tt_svd(w, r)
}

/// Largest deviation of `L(T_i)ᵀL(T_i)` from the identity over cores `1..m-1`.
pub fn left_orthogonality_error(tt: &TtTensor) -> f64 {
    let m = tt.order();
    tt.cores()[..m - 1]
        .iter()
        .map(|c| linalg::gram_deviation(&c.left_unfold()))
        .fold(0.0, f64::max)
}

/// Sum over separations of the squared singular values beyond `r_i`
/// (the standard TT-SVD error bound).
pub fn truncation_tail_bound(x: &DenseTensor, r: &RankVector) -> Result<f64> {
    ensure!(r.len() + 1 == x.order(), ShapeMismatch, "rank vector length {} for order {}", r.len(), x.order());
    let mut total = 0.0;
    for i in 1..x.order() {
        let s = linalg::singular_values(&x.separation(i)?);
        total += s.iter().skip(r.full(i)).map(|v| v * v).sum::<f64>();
    }
    Ok(total)
}
