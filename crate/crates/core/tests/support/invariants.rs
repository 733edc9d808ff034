//! Structural invariants, each checked on one random instance drawn from a
//! seed. Every check returns the observed discrepancy in its error message.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tt_complete::decomp::{truncation_tail_bound, tt_svd};
use tt_complete::metric::{
    apply_weight_power, apply_weight_power_tt, build_weights, weighted_inner, weighted_norm, EpsilonRule, ModeWeights,
};
use tt_complete::problems::qst::pauli_string_matrix;
use tt_complete::problems::{pauli_tt, qst_random_mpo, reconstruct_density, SamplingMode, SparseObservations};
use tt_complete::solver::{prgd_adaptive_step, residual, rgd_adaptive_step, search_direction, trim, trim_tt, Algorithm};
use tt_complete::tangent::{new_left_orthogonal, ProjectionInput, TangentBase};
use tt_complete::tt_core::{multi_index, Core, DenseTensor, RankVector, TtTensor};

pub type Check = Result<(), String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Caps each requested rank at the largest feasible value for `dims`.
pub fn feasible_ranks(dims: &[usize], raw: &[usize]) -> Vec<usize> {
    let m = dims.len();
    let mut r: Vec<usize> = (1..m)
        .map(|i| {
            let left: usize = dims[..i].iter().product();
            let right: usize = dims[i..].iter().product();
            raw[i - 1].clamp(1, left.min(right))
        })
        .collect();
    for i in 1..m - 1 {
        r[i] = r[i].min(r[i - 1] * dims[i]);
    }
    for i in (0..m - 2).rev() {
        r[i] = r[i].min(dims[i + 1] * r[i + 1]);
    }
    r
}

pub fn random_tt(dims: &[usize], ranks: &[usize], rng: &mut ChaCha8Rng) -> TtTensor {
    let rv = RankVector::new(ranks.to_vec()).unwrap();
    let cores = dims
        .iter()
        .enumerate()
        .map(|(k, &d)| Core::from_fn(rv.full(k), d, rv.full(k + 1), |_, _, _| rng.gen_range(-1.0..1.0)))
        .collect();
    TtTensor::new(cores).unwrap()
}

pub fn random_dense(dims: &[usize], rng: &mut ChaCha8Rng) -> DenseTensor {
    DenseTensor::from_fn(dims.to_vec(), |_| rng.gen_range(-1.0..1.0)).unwrap()
}

/// Weights built from a random sparse gradient on about half of the entries.
pub fn random_weights(dims: &[usize], rng: &mut ChaCha8Rng) -> ModeWeights {
    let g = random_observations(dims, 0.5, rng);
    build_weights(&g, EpsilonRule::VeeSquared).unwrap()
}

pub fn random_observations(dims: &[usize], fraction: f64, rng: &mut ChaCha8Rng) -> SparseObservations {
    let total: usize = dims.iter().product();
    let mut idx = Vec::new();
    let mut vals = Vec::new();
    for o in 0..total {
        if rng.gen_bool(fraction) {
            idx.push(multi_index(dims, o));
            vals.push(rng.gen_range(-3.0..3.0));
        }
    }
    if idx.is_empty() {
        idx.push(vec![0; dims.len()]);
        vals.push(1.0);
    }
    SparseObservations::new(dims.to_vec(), idx, vals, SamplingMode::WithoutReplacement).unwrap()
}

pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

fn within(what: &str, value: f64, tol: f64) -> Check {
    if value <= tol {
        Ok(())
    } else {
        Err(format!("{what}: {value:e} > {tol:e}"))
    }
}

/// Separation `T^{⟨i⟩}` equals `T^{≤i} T^{≥i+1}` for every `i`.
pub fn factorization(dims: &[usize], ranks: &[usize], seed: u64) -> Check {
    let t = random_tt(dims, ranks, &mut rng(seed));
    let dense = t.to_dense().unwrap();
    for i in 1..dims.len() {
        let prod = t.left_part(i).unwrap() * t.right_part(i + 1).unwrap();
        let sep = dense.separation(i).unwrap();
        within(&format!("separation {i}"), rel_diff(prod.as_slice(), sep.as_slice()), 1e-12)?;
    }
    Ok(())
}

/// TT-SVD reproduces a tensor of the requested rank.
pub fn tt_svd_exact(dims: &[usize], ranks: &[usize], seed: u64) -> Check {
    let t = random_tt(dims, ranks, &mut rng(seed));
    let dense = t.to_dense().unwrap();
    let out = tt_svd(&dense, &RankVector::new(ranks.to_vec()).unwrap()).unwrap();
    within("TT-SVD of a manifold point", rel_diff(out.to_dense().unwrap().values(), dense.values()), 1e-10)
}

/// `‖X − TT-SVD_r(X)‖² ≤ Σ_i Σ_{k>r_i} σ_k(X^{⟨i⟩})²` for a generic dense `X`.
pub fn tt_svd_quasi_optimal(dims: &[usize], ranks: &[usize], seed: u64) -> Check {
    let x = random_dense(dims, &mut rng(seed));
    let r = RankVector::new(ranks.to_vec()).unwrap();
    let out = tt_svd(&x, &r).unwrap();
    let err2 = out.to_dense().unwrap().sub(&x).unwrap().fro_norm().powi(2);
    let bound = truncation_tail_bound(&x, &r).unwrap();
    if err2 <= bound * (1.0 + 1e-12) + 1e-24 {
        Ok(())
    } else {
        Err(format!("squared error {err2:e} exceeds tail bound {bound:e}"))
    }
}

/// Weighting a TT tensor core by core agrees with weighting its dense form.
pub fn weighting_agreement(dims: &[usize], ranks: &[usize], seed: u64, power: f64) -> Check {
    let mut g = rng(seed);
    let t = random_tt(dims, ranks, &mut g);
    let w = random_weights(dims, &mut g);
    let via_tt = apply_weight_power_tt(&t, &w, power).unwrap().to_dense().unwrap();
    let via_dense = apply_weight_power(&t.to_dense().unwrap(), &w, power).unwrap();
    within("TT vs dense weighting", rel_diff(via_tt.values(), via_dense.values()), 1e-13)
}

/// `ε^{1/2}‖Z‖_F² ≤ ‖Z‖_W² ≤ (ε + ‖G‖_∨²)^{1/2}‖Z‖_F²`.
pub fn norm_sandwich(dims: &[usize], seed: u64) -> Check {
    let mut g = rng(seed);
    let w = random_weights(dims, &mut g);
    let z = random_dense(dims, &mut g);
    let (lo, hi) = w.equivalence_bounds();
    let f2 = z.fro_norm().powi(2);
    let w2 = weighted_norm(&z, &w).unwrap().powi(2);
    let slack = 1e-12 * hi * f2;
    if lo * f2 <= w2 + slack && w2 <= hi * f2 + slack {
        Ok(())
    } else {
        Err(format!("‖Z‖_W² = {w2:e} outside [{:e}, {:e}]", lo * f2, hi * f2))
    }
}

/// New left-orthogonal cores satisfy `L(T̃_i)ᵀ (I ⊗ G_i^{1/(2m)}) L(T̃_i) = I`
/// and the weighted left parts are orthonormal.
pub fn new_left_orthogonality(dims: &[usize], ranks: &[usize], seed: u64) -> Check {
    let mut g = rng(seed);
    let t = random_tt(dims, ranks, &mut g);
    let w = random_weights(dims, &mut g);
    let tl = new_left_orthogonal(&t, &w).unwrap();
    within(
        "new left-orthogonal form changes the tensor",
        rel_diff(tl.to_dense().unwrap().values(), t.to_dense().unwrap().values()),
        1e-11,
    )?;
    let half = w.scales(1.0);
    let m = dims.len();
    for i in 0..m - 1 {
        let c = tl.core(i);
        let gram = c.left_unfold().transpose() * c.scale_mode(&half[i]).left_unfold();
        let dev = (gram.clone() - DMatrix::identity(gram.nrows(), gram.ncols())).amax();
        within(&format!("core {i} weighted Gram"), dev, 1e-11)?;
    }
    for i in 1..m {
        let lp = tl.left_part(i).unwrap();
        let mut weighted = lp.clone();
        for row in 0..lp.nrows() {
            let idx = multi_index(&dims[..i], row);
            let f: f64 = (0..i).map(|k| half[k][idx[k]]).product();
            weighted.row_mut(row).scale_mut(f);
        }
        let gram = lp.transpose() * weighted;
        let dev = (gram.clone() - DMatrix::identity(gram.nrows(), gram.ncols())).amax();
        within(&format!("left part {i} weighted Gram"), dev, 1e-11)?;
    }
    Ok(())
}

/// The components `[T̃_1, …, δX_i, …, T̃_m]` of a projection are pairwise W-orthogonal.
pub fn component_orthogonality(dims: &[usize], ranks: &[usize], seed: u64) -> Check {
    let mut g = rng(seed);
    let t = random_tt(dims, ranks, &mut g);
    let w = random_weights(dims, &mut g);
    let a = random_dense(dims, &mut g);
    let v = TangentBase::new(&t, &w).unwrap().project(ProjectionInput::Dense(&a)).unwrap();
    let comps: Vec<DenseTensor> = (0..dims.len()).map(|i| v.component(i).to_dense().unwrap()).collect();
    let norms: Vec<f64> = comps.iter().map(|c| weighted_norm(c, &w).unwrap()).collect();
    let total = v.weighted_norm().max(f64::MIN_POSITIVE);
    for i in 0..comps.len() {
        for j in i + 1..comps.len() {
            let ij = weighted_inner(&comps[i], &comps[j], &w).unwrap();
            // a variation that vanishes in exact arithmetic (full-rank gauge) is roundoff-sized
            let scale = if norms[i].min(norms[j]) <= 1e-12 * total { total * total } else { norms[i] * norms[j] };
            within(&format!("⟨component {i}, component {j}⟩_W"), ij.abs() / scale, 1e-10)?;
        }
    }
    Ok(())
}

/// `P̃` is idempotent, self-adjoint in `⟨·,·⟩_W` and a W-contraction.
pub fn projection_properties(dims: &[usize], ranks: &[usize], seed: u64) -> Check {
    let mut g = rng(seed);
    let t = random_tt(dims, ranks, &mut g);
    let w = random_weights(dims, &mut g);
    let base = TangentBase::new(&t, &w).unwrap();
    let a = random_dense(dims, &mut g);
    let b = random_dense(dims, &mut g);
    let pa = base.project(ProjectionInput::Dense(&a)).unwrap().to_tt().to_dense().unwrap();
    let pb = base.project(ProjectionInput::Dense(&b)).unwrap().to_tt().to_dense().unwrap();
    let ppa = base.project(ProjectionInput::Dense(&pa)).unwrap().to_tt().to_dense().unwrap();
    within("idempotency", rel_diff(ppa.values(), pa.values()), 1e-10)?;
    let lhs = weighted_inner(&pa, &b, &w).unwrap();
    let rhs = weighted_inner(&a, &pb, &w).unwrap();
    let scale = weighted_norm(&a, &w).unwrap() * weighted_norm(&b, &w).unwrap();
    within("self-adjointness", (lhs - rhs).abs() / scale, 1e-10)?;
    let na = weighted_norm(&a, &w).unwrap();
    let npa = weighted_norm(&pa, &w).unwrap();
    within("contraction", (npa - na).max(0.0) / na, 1e-10)
}

/// Columns: every single-entry variation of every core of `t`, densified.
fn spanning_set(t: &TtTensor) -> DMatrix<f64> {
    let total = t.num_entries();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for k in 0..t.order() {
        let (l, d, r) = t.core(k).shape();
        for pos in 0..l * d * r {
            let mut cores = t.cores().to_vec();
            let mut e = Core::zeros(l, d, r);
            e.data_mut()[pos] = 1.0;
            cores[k] = e;
            cols.push(TtTensor::new(cores).unwrap().to_dense().unwrap().into_values());
        }
    }
    DMatrix::from_fn(total, cols.len(), |i, j| cols[j][i])
}

/// W-orthogonal projection onto the span of single-core variations, by weighted least squares.
pub fn oracle_projection(t: &TtTensor, w: &ModeWeights, a: &DenseTensor) -> Vec<f64> {
    let b = spanning_set(t);
    let dims = t.dims();
    let sqrt_w = apply_weight_power(&DenseTensor::from_fn(dims, |_| 1.0).unwrap(), w, 0.5).unwrap();
    let scale = DVector::from_column_slice(sqrt_w.values());
    let mut wb = b.clone();
    for (i, mut row) in wb.row_iter_mut().enumerate() {
        row *= scale[i];
    }
    let wa = DVector::from_column_slice(a.values()).component_mul(&scale);
    let c = wb.svd(true, true).solve(&wa, 1e-12).unwrap();
    (b * c).iter().copied().collect()
}

/// The closed-form projection agrees with the least-squares oracle.
pub fn projection_oracle(dims: &[usize], ranks: &[usize], seed: u64, tol: f64) -> Check {
    let mut g = rng(seed);
    let t = random_tt(dims, ranks, &mut g);
    let w = random_weights(dims, &mut g);
    let a = random_dense(dims, &mut g);
    let base = TangentBase::new(&t, &w).unwrap();
    let ours = base.project(ProjectionInput::Dense(&a)).unwrap().to_tt().to_dense().unwrap();
    let oracle = oracle_projection(&t, &w, &a);
    let scale = oracle.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
    let diff = ours.values().iter().zip(&oracle).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    within("projection vs oracle", diff / scale, tol)
}

/// The adaptive step zeroes the derivative of `α ↦ ½‖P_Ω(T − αD) − obs‖²`,
/// checked by a central difference.
pub fn adaptive_step_optimality(dims: &[usize], ranks: &[usize], seed: u64, algorithm: Algorithm) -> Check {
    let mut g = rng(seed);
    let t = random_tt(dims, ranks, &mut g);
    let obs = random_observations(dims, 0.4, &mut g);
    let res = residual(&t, &obs).unwrap();
    let (w, v) = search_direction(&t, &res, algorithm, EpsilonRule::VeeSquared).unwrap();
    let step = match algorithm {
        Algorithm::Rgd => rgd_adaptive_step(&v, &obs).unwrap(),
        Algorithm::Prgd => prgd_adaptive_step(&v, &w, &obs).unwrap(),
    };
    let Some(alpha) = step else {
        return Err("no step for a nonzero residual".into());
    };
    let d = v.values_at(&obs);
    let phi = |a: f64| 0.5 * res.values().iter().zip(&d).map(|(r, x)| (r - a * x).powi(2)).sum::<f64>();
    let slope0: f64 = -res.values().iter().zip(&d).map(|(r, x)| r * x).sum::<f64>();
    let h = 1e-3 * alpha;
    let deriv = (phi(alpha + h) - phi(alpha - h)) / (2.0 * h);
    within("derivative at the adaptive step", deriv.abs() / slope0.abs().max(f64::MIN_POSITIVE), 1e-8)?;
    if phi(alpha) > phi(alpha + h).min(phi(alpha - h)) {
        return Err("adaptive step is not a local minimizer".into());
    }
    Ok(())
}

/// Trimming clips to `[−ζ, ζ]`, keeps smaller entries and signs, is
/// idempotent and agrees between the dense and TT versions.
pub fn trim_postconditions(dims: &[usize], seed: u64, zeta: f64) -> Check {
    let mut g = rng(seed);
    let x = DenseTensor::from_fn(dims.to_vec(), |_| g.gen_range(-2.0..2.0)).unwrap();
    let y = trim(&x, zeta);
    for (a, b) in x.values().iter().zip(y.values()) {
        if b.abs() > zeta {
            return Err(format!("trimmed entry {b} exceeds {zeta}"));
        }
        if a.abs() < zeta && a != b {
            return Err(format!("entry {a} below the threshold changed to {b}"));
        }
        if a * b < 0.0 {
            return Err(format!("sign flipped: {a} → {b}"));
        }
    }
    if trim(&y, zeta) != y {
        return Err("trimming is not idempotent".into());
    }
    let t = tt_svd(&x, &RankVector::new(feasible_ranks(dims, &vec![usize::MAX; dims.len() - 1])).unwrap()).unwrap();
    let yt = trim_tt(&t, zeta).unwrap().to_dense().unwrap();
    within("TT trimming vs dense trimming", rel_diff(yt.values(), trim(&t.to_dense().unwrap(), zeta).values()), 1e-12)
}

/// Every entry of the measurement tensor equals `Tr(ρ W_a)` from dense matrices.
pub fn pauli_trace_oracle(n: usize, bond: usize, seed: u64) -> Check {
    let rho = qst_random_mpo(n, bond, seed).unwrap();
    let dense = rho.to_dense().unwrap();
    let t = pauli_tt(&rho).unwrap();
    let mut worst = 0.0f64;
    for o in 0..4usize.pow(n as u32) {
        let a = multi_index(&vec![4; n], o);
        let tr: Complex64 = (&dense * pauli_string_matrix(&a)).trace();
        worst = worst.max((t.entry(&a) - tr.re).abs()).max(tr.im.abs());
    }
    within("Pauli entries vs dense traces", worst, 1e-12)
}

/// `reconstruct_density(pauli_tt(ρ)) = ρ`.
pub fn density_round_trip(n: usize, bond: usize, seed: u64) -> Check {
    let rho = qst_random_mpo(n, bond, seed).unwrap();
    let back = reconstruct_density(&pauli_tt(&rho).unwrap()).unwrap();
    let a = rho.to_dense().unwrap();
    let b = back.to_dense().unwrap();
    within("density round trip", (&a - &b).norm() / a.norm(), 1e-10)
}
