//! Dense and tensor-train representations with the reshaping, unfolding and
//! contraction primitives shared by every other module.
//!
//! All reshapes group multi-indices with the first index varying fastest.

mod dense;
pub mod io;
mod tt;

pub use dense::{fro_norm, increment_index, inner, linear_offset, multi_index, DenseTensor};
pub use tt::{
    condition_number, eval_entry, left_part, right_part, to_dense, Core, RankVector, TtTensor, DEFAULT_DENSE_LIMIT,
    RANK_TOL,
};
pub use dense::check_dims;
pub(crate) use tt::carry_into_left;

pub fn separation(x: &DenseTensor, i: usize) -> crate::Result<crate::linalg::Matrix> {
    x.separation(i)
}

pub fn mode_unfold(x: &DenseTensor, mode: usize) -> crate::Result<crate::linalg::Matrix> {
    x.mode_unfold(mode)
}

pub fn mode_product(x: &DenseTensor, mode: usize, m: &crate::linalg::Matrix) -> crate::Result<DenseTensor> {
    x.mode_product(mode, m)
}
