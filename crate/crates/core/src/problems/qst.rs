//! Quantum state tomography with Pauli measurements.
//!
//! A density matrix `ρ` on `n` qubits is held as a matrix product operator
//! (MPO). Its Pauli measurement tensor `Y(a_1,…,a_n) = Tr(ρ σ_{a_1}⊗⋯⊗σ_{a_n})`
//! is a real order-`n` tensor with mode sizes 4 whose TT rank is bounded by
//! the MPO bond dimensions. Pauli ordering: `σ_1 = I, σ_2 = X, σ_3 = Y, σ_4 = Z`.
//! Qubit bit strings are linearized with the first qubit fastest.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::decomp::round;
use crate::error::{ensure, Result};
use crate::tt_core::{Core, RankVector, TtTensor};

type C = Complex64;

/// Largest qubit count accepted by the dense conversions.
pub const DENSE_QUBIT_LIMIT: usize = 10;
/// Tolerance on the imaginary part of the measurement tensor.
pub const IMAG_TOL: f64 = 1e-12;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

/// `σ_α(i, j)` for `α = 0..4` in the order I, X, Y, Z.
pub fn pauli(alpha: usize, i: usize, j: usize) -> C {
    const I_: C = C::new(0.0, 1.0);
    let m: [[C; 2]; 2] = match alpha {
        0 => [[ONE, ZERO], [ZERO, ONE]],
        1 => [[ZERO, ONE], [ONE, ZERO]],
        2 => [[ZERO, -I_], [I_, ZERO]],
        3 => [[ONE, ZERO], [ZERO, -ONE]],
        _ => panic!("Pauli index {alpha} out of range"),
    };
    m[i][j]
}

/// Dense `σ_{a_1} ⊗ ⋯ ⊗ σ_{a_n}` (0-based Pauli indices).
pub fn pauli_string_matrix(a: &[usize]) -> DMatrix<C> {
    let dim = 1usize << a.len();
    DMatrix::from_fn(dim, dim, |i, j| a.iter().enumerate().map(|(k, &ak)| pauli(ak, (i >> k) & 1, (j >> k) & 1)).product())
}

/// Matrix product state `u(i_1…i_n) = U_1(i_1)⋯U_n(i_n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mps {
    /// `(bond dims, data)` per site; entry `(a, i, b)` at `a + l·(i + 2·b)`.
    cores: Vec<(usize, usize, Vec<C>)>,
}

impl Mps {
    pub fn n_qubits(&self) -> usize {
        self.cores.len()
    }

    fn get(&self, k: usize, a: usize, i: usize, b: usize) -> C {
        let (l, _, ref d) = self.cores[k];
        d[a + l * (i + 2 * b)]
    }

    /// `Σ |u|²` via transfer matrices.
    pub fn norm_sq(&self) -> f64 {
        let mut e = DMatrix::from_element(1, 1, ONE);
        for (k, &(l, r, _)) in self.cores.iter().enumerate() {
            let mut next = DMatrix::from_element(r, r, ZERO);
            for i in 0..2 {
                let u = DMatrix::from_fn(l, r, |a, b| self.get(k, a, i, b));
                next += u.adjoint() * &e * &u;
            }
            e = next;
        }
        e[(0, 0)].re
    }

    /// Dense state vector.
    pub fn to_vector(&self) -> Result<Vec<C>> {
        let n = self.n_qubits();
        ensure!(n <= 2 * DENSE_QUBIT_LIMIT, Capacity, "{n} qubits is too many for a dense state");
        // rows: bit strings of the sites so far; columns: current bond
        let mut acc = DMatrix::from_element(1, 1, ONE);
        for (k, &(l, r, _)) in self.cores.iter().enumerate() {
            let rows = acc.nrows();
            let mut next = DMatrix::from_element(rows * 2, r, ZERO);
            for i in 0..2 {
                let u = DMatrix::from_fn(l, r, |a, b| self.get(k, a, i, b));
                let block = &acc * u;
                for row in 0..rows {
                    for b in 0..r {
                        next[(row + rows * i, b)] = block[(row, b)];
                    }
                }
            }
            acc = next;
        }
        Ok(acc.column(0).iter().copied().collect())
    }

    /// `ρ = u u†` with cores `U_k ⊗ conj(U_k)`.
    pub fn to_mpo(&self) -> Mpo {
        let cores = self
            .cores
            .iter()
            .enumerate()
            .map(|(k, &(l, r, _))| {
                let mut x = MpoCore::zeros(l * l, r * r);
                for (a, ap, b, bp) in iproduct4(l, l, r, r) {
                    for i in 0..2 {
                        for j in 0..2 {
                            x.set(a + l * ap, i, j, b + r * bp, self.get(k, a, i, b) * self.get(k, ap, j, bp).conj());
                        }
                    }
                }
                x
            })
            .collect();
        Mpo { cores }
    }
}

fn iproduct4(n1: usize, n2: usize, n3: usize, n4: usize) -> impl Iterator<Item = (usize, usize, usize, usize)> {
    (0..n1).flat_map(move |a| (0..n2).flat_map(move |b| (0..n3).flat_map(move |c| (0..n4).map(move |d| (a, b, c, d)))))
}

/// Order-4 MPO core `X(a, i, j, b)` stored at `a + l·(i + 2·(j + 2·b))`.
#[derive(Clone, Debug, PartialEq)]
pub struct MpoCore {
    left: usize,
    right: usize,
    data: Vec<C>,
}

impl MpoCore {
    pub fn zeros(left: usize, right: usize) -> Self {
        Self { left, right, data: vec![ZERO; left * 4 * right] }
    }

    pub fn left_rank(&self) -> usize {
        self.left
    }

    pub fn right_rank(&self) -> usize {
        self.right
    }

    pub fn get(&self, a: usize, i: usize, j: usize, b: usize) -> C {
        self.data[a + self.left * (i + 2 * (j + 2 * b))]
    }

    pub fn set(&mut self, a: usize, i: usize, j: usize, b: usize, v: C) {
        self.data[a + self.left * (i + 2 * (j + 2 * b))] = v;
    }

    /// The `left × right` matrix `X(:, i, j, :)`.
    fn block(&self, i: usize, j: usize) -> DMatrix<C> {
        DMatrix::from_fn(self.left, self.right, |a, b| self.get(a, i, j, b))
    }
}

/// `ρ(i, j) = X_1(i_1, j_1)⋯X_n(i_n, j_n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mpo {
    cores: Vec<MpoCore>,
}

impl Mpo {
    pub fn new(cores: Vec<MpoCore>) -> Result<Self> {
        ensure!(!cores.is_empty(), Domain, "an MPO needs at least one site");
        ensure!(cores[0].left == 1 && cores[cores.len() - 1].right == 1, ShapeMismatch, "boundary bonds must be 1");
        for w in cores.windows(2) {
            ensure!(w[0].right == w[1].left, ShapeMismatch, "bond mismatch {} vs {}", w[0].right, w[1].left);
        }
        Ok(Self { cores })
    }

    pub fn n_qubits(&self) -> usize {
        self.cores.len()
    }

    pub fn cores(&self) -> &[MpoCore] {
        &self.cores
    }

    /// Interior bond dimensions `(r_1, …, r_{n−1})`.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.cores[..self.cores.len() - 1].iter().map(|c| c.right).collect()
    }

    pub fn trace(&self) -> C {
        let mut e = DMatrix::from_element(1, 1, ONE);
        for c in &self.cores {
            e = e * (c.block(0, 0) + c.block(1, 1));
        }
        e[(0, 0)]
    }

    /// Dense `2^n × 2^n` matrix.
    pub fn to_dense(&self) -> Result<DMatrix<C>> {
        let n = self.n_qubits();
        ensure!(n <= DENSE_QUBIT_LIMIT, Capacity, "{n} qubits exceed the dense limit {DENSE_QUBIT_LIMIT}");
        let mut acc: Vec<DMatrix<C>> = vec![DMatrix::from_element(1, 1, ONE)];
        for c in &self.cores {
            let dim = acc[0].nrows();
            let mut next = vec![DMatrix::from_element(2 * dim, 2 * dim, ZERO); c.right];
            for (b, out) in next.iter_mut().enumerate() {
                for (a, m) in acc.iter().enumerate() {
                    for i in 0..2 {
                        for j in 0..2 {
                            let x = c.get(a, i, j, b);
                            if x == ZERO {
                                continue;
                            }
                            let mut view = out.view_mut((dim * i, dim * j), (dim, dim));
                            view += m * x;
                        }
                    }
                }
            }
            acc = next;
        }
        Ok(acc.swap_remove(0))
    }
}

/// Random pure state on `n` qubits as an MPS with bond dimensions
/// `min(bond, 2^k, 2^{n−k})`, complex Gaussian entries, unit norm.
pub fn qst_random_mps(n: usize, bond: usize, seed: u64) -> Result<Mps> {
    ensure!(n >= 2, Domain, "need at least two qubits, got {n}");
    ensure!(bond >= 1, Domain, "bond dimension must be positive");
    let cap = |k: usize| -> usize {
        let edge = k.min(n - k);
        if edge >= usize::BITS as usize - 1 {
            bond
        } else {
            bond.min(1usize << edge)
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut cores: Vec<(usize, usize, Vec<C>)> = (0..n)
        .map(|k| {
            let (l, r) = (cap(k), cap(k + 1));
            let data = (0..l * 2 * r)
                .map(|_| C::new(rng.sample::<f64, _>(StandardNormal) * scale, rng.sample::<f64, _>(StandardNormal) * scale))
                .collect();
            (l, r, data)
        })
        .collect();
    let mut mps = Mps { cores: Vec::new() };
    std::mem::swap(&mut mps.cores, &mut cores);
    let norm = mps.norm_sq().sqrt();
    for v in mps.cores[0].2.iter_mut() {
        *v /= norm;
    }
    Ok(mps)
}

/// Random rank-one density matrix `uu†` (trace 1), MPO bond dims `s_k²`.
pub fn qst_random_mpo(n: usize, bond: usize, seed: u64) -> Result<Mpo> {
    Ok(qst_random_mps(n, bond, seed)?.to_mpo())
}

/// The real Pauli measurement tensor `Tr(ρ W_a)` in TT format with the MPO's bond dimensions.
pub fn pauli_tt(rho: &Mpo) -> Result<TtTensor> {
    let n = rho.n_qubits();
    // complex cores Y_k(a, α, b) = Σ_{ij} X_k(a,i,j,b) σ_α(j,i), each written as
    // 2×2 real blocks [[re, −im], [im, re]] on doubled bonds
    let real_rep = |c: &MpoCore| -> Core {
        let (l, r) = (c.left, c.right);
        Core::from_fn(2 * l, 4, 2 * r, |row, alpha, col| {
            let (a, p) = (row % l, row / l);
            let (b, q) = (col % r, col / r);
            let y: C = (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| c.get(a, i, j, b) * pauli(alpha, j, i)).sum();
            match (p, q) {
                (0, 0) | (1, 1) => y.re,
                (0, 1) => -y.im,
                _ => y.im,
            }
        })
    };
    let blocks: Vec<Core> = rho.cores.iter().map(real_rep).collect();
    let pick = |part: usize| -> Result<TtTensor> {
        let mut cores = blocks.clone();
        let first = &blocks[0];
        cores[0] = Core::from_fn(1, 4, first.right_rank(), |_, x, b| first.get(part, x, b));
        let last = &cores[n - 1];
        let l = last.left_rank();
        cores[n - 1] = Core::from_fn(l, 4, 1, |a, x, _| last.get(a, x, 0));
        TtTensor::new(cores)
    };
    let re = pick(0)?;
    let im = pick(1)?;
    let re_norm = re.fro_norm();
    let im_norm = im.fro_norm();
    ensure!(
        im_norm <= IMAG_TOL * re_norm.max(1.0),
        Consistency,
        "measurement tensor has imaginary part of norm {im_norm:e} (Hermitian input expected)"
    );
    let dims = vec![4; n];
    let caps: Vec<usize> = rho
        .bond_dims()
        .iter()
        .enumerate()
        .map(|(k, &b)| b.min(4usize.saturating_pow((k + 1).min(n - k - 1) as u32)))
        .collect();
    let ranks = RankVector::new(caps)?;
    ranks.check_feasible(&dims)?;
    let compact = round(&re, &ranks)?;
    let loss = compact.distance(&re)?;
    ensure!(
        loss <= 1e-10 * re_norm.max(1.0),
        Consistency,
        "measurement tensor does not have the MPO's TT rank (truncation loss {loss:e})"
    );
    Ok(compact)
}

/// Inverse of [`pauli_tt`]: `X_k(:, i, j, :) = ½ Σ_α Y_k(:, α, :) σ_α(i, j)`.
pub fn reconstruct_density(t: &TtTensor) -> Result<Mpo> {
    ensure!(t.dims().iter().all(|&d| d == 4), ShapeMismatch, "Pauli tensors have mode sizes 4, got {:?}", t.dims());
    let cores = t
        .cores()
        .iter()
        .map(|y| {
            let (l, _, r) = y.shape();
            let mut x = MpoCore::zeros(l, r);
            for (a, b) in (0..l).flat_map(|a| (0..r).map(move |b| (a, b))) {
                for i in 0..2 {
                    for j in 0..2 {
                        let v: C = (0..4).map(|alpha| pauli(alpha, i, j) * y.get(a, alpha, b)).sum::<C>() * 0.5;
                        x.set(a, i, j, b, v);
                    }
                }
            }
            x
        })
        .collect();
    Mpo::new(cores)
}

/// `Re Tr(ρ_true ρ_rec)`; equals `u† ρ_rec u` when `ρ_true = uu†`.
pub fn fidelity_diag(rho_true: &Mpo, rho_rec: &Mpo) -> Result<f64> {
    ensure!(rho_true.n_qubits() == rho_rec.n_qubits(), ShapeMismatch, "qubit counts differ");
    let mut e = DMatrix::from_element(1, 1, ONE);
    for (x1, x2) in rho_true.cores.iter().zip(&rho_rec.cores) {
        let mut next = DMatrix::from_element(x1.right, x2.right, ZERO);
        for i in 0..2 {
            for j in 0..2 {
                next += x1.block(i, j).transpose() * &e * x2.block(j, i);
            }
        }
        e = next;
    }
    Ok(e[(0, 0)].re)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_qubit(rho: [[C; 2]; 2]) -> Mpo {
        let mut x = MpoCore::zeros(1, 1);
        for i in 0..2 {
            for j in 0..2 {
                x.set(0, i, j, 0, rho[i][j]);
            }
        }
        Mpo::new(vec![x]).unwrap()
    }

    #[test]
    fn single_qubit_measurements() {
        let zero = single_qubit([[ONE, ZERO], [ZERO, ZERO]]);
        let y = pauli_tt(&zero).unwrap().to_dense().unwrap();
        assert_eq!(y.values(), &[1.0, 0.0, 0.0, 1.0]);
        let mixed = single_qubit([[C::new(0.5, 0.0), ZERO], [ZERO, C::new(0.5, 0.0)]]);
        let y = pauli_tt(&mixed).unwrap().to_dense().unwrap();
        assert_eq!(y.values(), &[1.0, 0.0, 0.0, 0.0]);
        let back = reconstruct_density(&pauli_tt(&mixed).unwrap()).unwrap();
        assert_eq!(back.to_dense().unwrap(), mixed.to_dense().unwrap());
    }

    #[test]
    fn y_sign_follows_trace_convention() {
        // |+i⟩ = (|0⟩ + i|1⟩)/√2 has ⟨Y⟩ = +1
        let h = C::new(0.5, 0.0);
        let rho = single_qubit([[h, C::new(0.0, -0.5)], [C::new(0.0, 0.5), h]]);
        let y = pauli_tt(&rho).unwrap().to_dense().unwrap();
        assert!((y.values()[2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_state_is_a_density_matrix() {
        let mps = qst_random_mps(4, 2, 3).unwrap();
        assert!((mps.norm_sq() - 1.0).abs() < 1e-12);
        let rho = mps.to_mpo();
        assert_eq!(rho.bond_dims(), vec![4, 4, 4]);
        assert!((rho.trace() - ONE).norm() < 1e-12);
        let d = rho.to_dense().unwrap();
        assert!((&d - d.adjoint()).camax() < 1e-14);
        let u = mps.to_vector().unwrap();
        let uu = DMatrix::from_fn(16, 16, |i, j| u[i] * u[j].conj());
        assert!((&d - uu).camax() < 1e-14);
        assert!((fidelity_diag(&rho, &rho).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bond_one_is_product_state() {
        let rho = qst_random_mpo(3, 1, 5).unwrap();
        let t = pauli_tt(&rho).unwrap();
        assert_eq!(t.ranks().as_slice(), &[1, 1]);
        assert!((t.entry(&[0, 0, 0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bond_dims_are_capped_near_the_boundary() {
        let mps = qst_random_mps(3, 4, 1).unwrap();
        assert_eq!(mps.to_mpo().bond_dims(), vec![4, 4]);
    }

    #[test]
    fn rank_deficient_block_unfolding_rounds_exactly() {
        // the doubled-bond unfolding at the middle cut has exact zero singular values
        let rho = qst_random_mpo(5, 3, 14612542756824174244).unwrap();
        let t = pauli_tt(&rho).unwrap();
        assert_eq!(t.ranks().as_slice(), &[4, 9, 9, 4]);
    }

    #[test]
    fn bad_arguments() {
        assert!(qst_random_mps(1, 2, 0).is_err());
        assert!(qst_random_mps(3, 0, 0).is_err());
        let t = TtTensor::zeros(&[4, 3], &RankVector::new(vec![1]).unwrap()).unwrap();
        assert!(reconstruct_density(&t).is_err());
    }
}
