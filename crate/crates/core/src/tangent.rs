//! Tangent space of the fixed-TT-rank manifold under the weighted metric.
//!
//! A point `T` is brought into *new left-orthogonal* form `[T̃_1, …, T̃_m]`:
//! the weighted cores `T̂_i = T̃_i ×_2 G_i^{1/(4m)}` are left-orthogonal in the
//! ordinary sense, so `L(T̃_i)ᵀ (I ⊗ G_i^{1/(2m)}) L(T̃_i) = I`. Tangent vectors
//! are sums `Σ_i [T̃_1, …, X_i, …, T̃_m]` with the gauge
//! `L(X_i)ᵀ (I ⊗ G_i^{1/(2m)}) L(T̃_i) = 0` for `i < m`, which makes the `m`
//! terms mutually orthogonal in `⟨·,·⟩_W`.
//!
//! The W-orthogonal projection is computed in the weighted ("hat")
//! coordinates, where it is the Euclidean projection onto the tangent space
//! at `T̂ = W^{1/2} T`:
//!
//! ```text
//! L(Â_i) = (I − L(T̂_i)L(T̂_i)ᵀ) · Z_i · (T̂^{≥i+1} T̂^{≥i+1,ᵀ})^{-1},   i < m
//! L(Â_m) = Z_m
//! Z_i    = (T̂^{≤i-1} ⊗ I)ᵀ · Â^{⟨i⟩} · T̂^{≥i+1,ᵀ},   Â = W^{1/2} A
//! ```
//!
//! and mapped back with `A_i = Â_i ×_2 G_i^{-1/(4m)}`.

use std::sync::Arc;

use crate::decomp::left_orthogonalize;
use crate::error::{ensure, Result};
use crate::linalg::{self, Matrix};
use crate::metric::{apply_weight_power, apply_weight_power_sparse, apply_weight_power_tt, ModeWeights};
use crate::problems::SparseObservations;
use crate::tt_core::{Core, DenseTensor, TtTensor};

/// Returns `[T̃_1, …, T̃_m]`, the new left-orthogonal decomposition of `t` under `w`.
pub fn new_left_orthogonal(t: &TtTensor, w: &ModeWeights) -> Result<TtTensor> {
    let hat = left_orthogonalize(&apply_weight_power_tt(t, w, 0.5)?);
    apply_weight_power_tt(&hat, w, -0.5)
}

/// A manifold point in new left-orthogonal form with the per-iterate caches
/// the projection needs.
#[derive(Clone, Debug)]
pub struct TangentBase {
    tilde: TtTensor,
    hat: TtTensor,
    weights: ModeWeights,
    /// `T̂^{≥i+1} T̂^{≥i+1,ᵀ}` for `i = 1..m` (the last one is `[1]`).
    right_grams: Vec<Matrix>,
}

impl TangentBase {
    pub fn new(t: &TtTensor, w: &ModeWeights) -> Result<Arc<Self>> {
        ensure!(t.order() >= 2, Domain, "tangent spaces need order ≥ 2");
        ensure!(w.dims() == t.dims(), ShapeMismatch, "weights for {:?}, tensor {:?}", w.dims(), t.dims());
        let (hat, tilde) = if w.is_identity() {
            let h = left_orthogonalize(t);
            (h.clone(), h)
        } else {
            let h = left_orthogonalize(&apply_weight_power_tt(t, w, 0.5)?);
            let tl = apply_weight_power_tt(&h, w, -0.5)?;
            (h, tl)
        };
        let m = hat.order();
        let mut right_grams = vec![Matrix::from_element(1, 1, 1.0); m];
        for i in (1..m).rev() {
            let core = hat.core(i);
            let next = &right_grams[i];
            let mut g = Matrix::zeros(core.left_rank(), core.left_rank());
            for x in 0..core.mode_size() {
                let s = core.slice(x);
                g += &s * next * s.transpose();
            }
            right_grams[i - 1] = g;
        }
        Ok(Arc::new(Self { tilde, hat, weights: w.clone(), right_grams }))
    }

    /// The point in new left-orthogonal form.
    pub fn tilde(&self) -> &TtTensor {
        &self.tilde
    }

    /// `W^{1/2}` applied to the point; left-orthogonal.
    pub fn hat(&self) -> &TtTensor {
        &self.hat
    }

    pub fn weights(&self) -> &ModeWeights {
        &self.weights
    }

    pub fn order(&self) -> usize {
        self.hat.order()
    }

    /// Projects `a` onto the tangent space W-orthogonally.
    pub fn project(self: &Arc<Self>, a: ProjectionInput<'_>) -> Result<TangentVector> {
        let z = match a {
            ProjectionInput::Sparse(obs) => {
                ensure!(obs.dims() == self.hat.dims(), ShapeMismatch, "input dims {:?} vs {:?}", obs.dims(), self.hat.dims());
                let weighted = if self.weights.is_identity() {
                    obs.clone()
                } else {
                    apply_weight_power_sparse(obs, &self.weights, 0.5)?
                };
                self.contract_sparse(&weighted)
            }
            ProjectionInput::Dense(x) => {
                ensure!(x.dims() == self.hat.dims(), ShapeMismatch, "input dims {:?} vs {:?}", x.dims(), self.hat.dims());
                self.contract_dense(&apply_weight_power(x, &self.weights, 0.5)?)?
            }
        };
        let m = self.order();
        let inv_quarter = self.weights.scales(-0.5);
        let mut variations = Vec::with_capacity(m);
        for (i, zi) in z.into_iter().enumerate() {
            let core = self.hat.core(i);
            let mut y = if i + 1 < m { linalg::solve_spd_right(&zi, &self.right_grams[i]) } else { zi };
            if i + 1 < m {
                let l = core.left_unfold();
                let coeff = l.transpose() * &y;
                y -= &l * coeff;
            }
            let hat_var = Core::from_left_unfold(core.left_rank(), core.mode_size(), &y)?;
            variations.push(hat_var.scale_mode(&inv_quarter[i]));
        }
        Ok(TangentVector { base: Arc::clone(self), variations })
    }

    /// `Z_i` for a sparse weighted input, accumulated entry by entry.
    fn contract_sparse(&self, a: &SparseObservations) -> Vec<Matrix> {
        let m = self.order();
        let cores = self.hat.cores();
        let mut z: Vec<Matrix> = cores.iter().map(|c| Matrix::zeros(c.left_rank() * c.mode_size(), c.right_rank())).collect();
        // prefix[k] = T̂_1(x_1,:)⋯T̂_k(:,x_k,:), suffix[k] = T̂_{k+1}(:,x_{k+1},:)⋯T̂_m(:,x_m)
        let mut prefix: Vec<Vec<f64>> = (0..m).map(|k| vec![0.0; if k == 0 { 1 } else { cores[k - 1].right_rank() }]).collect();
        let mut suffix: Vec<Vec<f64>> = (0..m).map(|k| vec![0.0; cores[k].right_rank()]).collect();
        prefix[0][0] = 1.0;
        suffix[m - 1][0] = 1.0;
        for (idx, v) in a.iter() {
            if v == 0.0 {
                continue;
            }
            for k in 1..m {
                let (done, rest) = prefix.split_at_mut(k);
                cores[k - 1].row_times_slice(&done[k - 1], idx[k - 1], &mut rest[0]);
            }
            for k in (0..m - 1).rev() {
                let (head, tail) = suffix.split_at_mut(k + 1);
                cores[k + 1].slice_times_col(idx[k + 1], &tail[0], &mut head[k]);
            }
            for k in 0..m {
                let left = &prefix[k];
                let right = &suffix[k];
                let r0 = left.len();
                let x = idx[k];
                let zk = &mut z[k];
                for (b, &rb) in right.iter().enumerate() {
                    let s = v * rb;
                    if s == 0.0 {
                        continue;
                    }
                    for (a_, &la) in left.iter().enumerate() {
                        zk[(a_ + r0 * x, b)] += s * la;
                    }
                }
            }
        }
        z
    }

    /// `Z_i` for a dense weighted input via left/right parts.
    fn contract_dense(&self, a: &DenseTensor) -> Result<Vec<Matrix>> {
        let m = self.order();
        let dims = a.dims();
        let mut out = Vec::with_capacity(m);
        for i in 0..m {
            let p: usize = dims[..i].iter().product();
            let d = dims[i];
            let q: usize = dims[i + 1..].iter().product();
            let left = self.hat.left_part(i)?; // p × r_{i-1}
            let right = self.hat.right_part(i + 2)?; // r_i × q
            let as_pq = Matrix::from_column_slice(p, d * q, a.values());
            let b = left.transpose() * as_pq; // r_{i-1} × (d·q)
            let r0 = left.ncols();
            let b = Matrix::from_column_slice(r0 * d, q, b.as_slice());
            out.push(b * right.transpose());
        }
        Ok(out)
    }
}

/// Input of a tangent projection.
#[derive(Clone, Copy, Debug)]
pub enum ProjectionInput<'a> {
    Dense(&'a DenseTensor),
    Sparse(&'a SparseObservations),
}

/// Projects `a` onto the tangent space at `base`; `w` must be the weights `base` was built with.
pub fn project_tangent(base: &Arc<TangentBase>, w: &ModeWeights, a: ProjectionInput<'_>) -> Result<TangentVector> {
    ensure!(
        *w == base.weights,
        Contract,
        "projection weights differ from the weights used to orthogonalize the base point"
    );
    base.project(a)
}

/// Element `Σ_i [T̃_1, …, X_i, …, T̃_m]` of a tangent space.
#[derive(Clone, Debug)]
pub struct TangentVector {
    base: Arc<TangentBase>,
    variations: Vec<Core>,
}

impl TangentVector {
    pub fn from_variations(base: &Arc<TangentBase>, variations: Vec<Core>) -> Result<Self> {
        ensure!(variations.len() == base.order(), ShapeMismatch, "{} variations for order {}", variations.len(), base.order());
        for (v, t) in variations.iter().zip(base.tilde.cores()) {
            ensure!(v.shape() == t.shape(), ShapeMismatch, "variation shape {:?} vs core {:?}", v.shape(), t.shape());
        }
        Ok(Self { base: Arc::clone(base), variations })
    }

    pub fn base(&self) -> &Arc<TangentBase> {
        &self.base
    }

    pub fn variations(&self) -> &[Core] {
        &self.variations
    }

    /// `Σ_i δX_i` as a TT of rank at most `2r`.
    pub fn to_tt(&self) -> TtTensor {
        self.combine_with_base(0.0, 1.0)
    }

    /// `base_coef·T + tangent_coef·Σ_i δX_i` as a TT of rank at most `2r`.
    pub fn combine_with_base(&self, base_coef: f64, tangent_coef: f64) -> TtTensor {
        let m = self.variations.len();
        let t = self.base.tilde.cores();
        let x = &self.variations;
        let mut cores = Vec::with_capacity(m);
        for k in 0..m {
            let (tk, xk) = (&t[k], &x[k]);
            let (l, d, r) = tk.shape();
            let c = if k == 0 {
                Core::from_fn(1, d, 2 * r, |_, i, j| if j < r { tk.get(0, i, j) } else { tangent_coef * xk.get(0, i, j - r) })
            } else if k == m - 1 {
                Core::from_fn(2 * l, d, 1, |a, i, _| {
                    if a < l {
                        base_coef * tk.get(a, i, 0) + tangent_coef * xk.get(a, i, 0)
                    } else {
                        tk.get(a - l, i, 0)
                    }
                })
            } else {
                Core::from_fn(2 * l, d, 2 * r, |a, i, j| match (a < l, j < r) {
                    (true, true) => tk.get(a, i, j),
                    (true, false) => tangent_coef * xk.get(a, i, j - r),
                    (false, false) => tk.get(a - l, i, j - r),
                    (false, true) => 0.0,
                })
            };
            cores.push(c);
        }
        TtTensor::new(cores).expect("tangent cores chain")
    }

    /// The single term `[T̃_1, …, X_i, …, T̃_m]`.
    pub fn component(&self, i: usize) -> TtTensor {
        let mut cores = self.base.tilde.cores().to_vec();
        cores[i] = self.variations[i].clone();
        TtTensor::new(cores).expect("same shapes as base")
    }

    /// `‖Σ δX_i‖_W`, using the W-orthogonality of the components.
    pub fn weighted_norm(&self) -> f64 {
        let quarter = self.base.weights.scales(0.5);
        self.variations
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let l = x.scale_mode(&quarter[i]).left_unfold();
                (&l * &self.base.right_grams[i]).component_mul(&l).sum()
            })
            .sum::<f64>()
            .max(0.0)
            .sqrt()
    }

    /// Largest `|L(X_i)ᵀ (I ⊗ G_i^{1/(2m)}) L(T̃_i)|` over `i < m`.
    pub fn gauge_error(&self) -> f64 {
        let half = self.base.weights.scales(1.0);
        let m = self.variations.len();
        (0..m - 1)
            .map(|i| {
                let lx = self.variations[i].left_unfold();
                let lt = self.base.tilde.core(i).scale_mode(&half[i]).left_unfold();
                (lx.transpose() * lt).amax()
            })
            .fold(0.0, f64::max)
    }

    /// Values of `Σ δX_i` at the observed indices.
    pub fn values_at(&self, obs: &SparseObservations) -> Vec<f64> {
        let tt = self.to_tt();
        obs.iter().map(|(idx, _)| tt.entry(idx)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.variations.iter().all(|c| c.data().iter().all(|&v| v == 0.0))
    }
}

pub fn tangent_to_full(v: &TangentVector) -> TtTensor {
    v.to_tt()
}

pub fn tangent_weighted_norm(v: &TangentVector) -> f64 {
    v.weighted_norm()
}
