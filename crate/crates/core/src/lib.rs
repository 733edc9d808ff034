//! Low-rank tensor completion in the tensor-train format.
//!
//! The crate provides dense and TT tensor containers, the TT-SVD and TT
//! rounding, a data-driven diagonal metric on the ambient space, tangent-space
//! projections of the fixed-rank TT manifold under that metric, and
//! Riemannian gradient solvers (plain and preconditioned) for
//! `min ½‖P_Ω(T − T*)‖²` over TT tensors of fixed rank.

pub mod decomp;
mod error;
pub mod linalg;
pub mod metric;
pub mod problems;
pub mod solver;
pub mod tangent;
pub mod tt_core;

pub use error::{Error, Result};
