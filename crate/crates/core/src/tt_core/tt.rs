use crate::error::{ensure, Result};
use crate::linalg::{self, Matrix};

use super::dense::{check_dims, increment_index, DenseTensor};

/// Default upper bound on the number of entries [`TtTensor::to_dense`] will materialize.
pub const DEFAULT_DENSE_LIMIT: usize = 100_000_000;

/// Relative singular-value cutoff used for numerical rank diagnostics.
pub const RANK_TOL: f64 = 1e-10;

/// Order-3 core of shape `(left, mode, right)`, stored first-index-fastest:
/// element `(a, x, b)` lives at `a + left·(x + mode·b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Core {
    left: usize,
    mode: usize,
    right: usize,
    data: Vec<f64>,
}

impl Core {
    pub fn new(left: usize, mode: usize, right: usize, data: Vec<f64>) -> Result<Self> {
        ensure!(left >= 1 && mode >= 1 && right >= 1, Domain, "core shape ({left},{mode},{right}) has a zero extent");
        ensure!(
            data.len() == left * mode * right,
            ShapeMismatch,
            "core ({left},{mode},{right}) needs {} values, got {}",
            left * mode * right,
            data.len()
        );
        Ok(Self { left, mode, right, data })
    }

    pub fn zeros(left: usize, mode: usize, right: usize) -> Self {
        Self { left, mode, right, data: vec![0.0; left * mode * right] }
    }

    pub fn from_fn(left: usize, mode: usize, right: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(left * mode * right);
        for b in 0..right {
            for x in 0..mode {
                for a in 0..left {
                    data.push(f(a, x, b));
                }
            }
        }
        Self { left, mode, right, data }
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.left, self.mode, self.right)
    }

    pub fn left_rank(&self) -> usize {
        self.left
    }

    pub fn mode_size(&self) -> usize {
        self.mode
    }

    pub fn right_rank(&self) -> usize {
        self.right
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, a: usize, x: usize, b: usize) -> f64 {
        self.data[a + self.left * (x + self.mode * b)]
    }

    #[inline]
    pub fn set(&mut self, a: usize, x: usize, b: usize, v: f64) {
        self.data[a + self.left * (x + self.mode * b)] = v;
    }

    /// `L(U)`: `(left·mode) × right`, row index `a + left·x`.
    pub fn left_unfold(&self) -> Matrix {
        Matrix::from_column_slice(self.left * self.mode, self.right, &self.data)
    }

    /// `R(U)`: `left × (mode·right)`, column index `x + mode·b`.
    pub fn right_unfold(&self) -> Matrix {
        Matrix::from_column_slice(self.left, self.mode * self.right, &self.data)
    }

    pub fn from_left_unfold(left: usize, mode: usize, mat: &Matrix) -> Result<Self> {
        ensure!(mat.nrows() == left * mode, ShapeMismatch, "left unfolding has {} rows, expected {}", mat.nrows(), left * mode);
        Self::new(left, mode, mat.ncols(), mat.as_slice().to_vec())
    }

    pub fn from_right_unfold(mode: usize, right: usize, mat: &Matrix) -> Result<Self> {
        ensure!(mat.ncols() == mode * right, ShapeMismatch, "right unfolding has {} columns, expected {}", mat.ncols(), mode * right);
        Self::new(mat.nrows(), mode, right, mat.as_slice().to_vec())
    }

    /// The `left × right` slice `U(:, x, :)`.
    pub fn slice(&self, x: usize) -> Matrix {
        let mut m = Matrix::zeros(self.left, self.right);
        for b in 0..self.right {
            let off = self.left * (x + self.mode * b);
            for a in 0..self.left {
                m[(a, b)] = self.data[off + a];
            }
        }
        m
    }

    /// Multiplies the mode-`x` slice by `scale[x]` (a diagonal mode-2 product).
    pub fn scale_mode(&self, scale: &[f64]) -> Self {
        assert_eq!(scale.len(), self.mode);
        let mut out = self.clone();
        for b in 0..self.right {
            for x in 0..self.mode {
                let off = self.left * (x + self.mode * b);
                for v in &mut out.data[off..off + self.left] {
                    *v *= scale[x];
                }
            }
        }
        out
    }

    /// `row · U(:, x, :)` for a row vector of length `left`.
    #[inline]
    pub(crate) fn row_times_slice(&self, row: &[f64], x: usize, out: &mut [f64]) {
        debug_assert_eq!(row.len(), self.left);
        debug_assert_eq!(out.len(), self.right);
        for (b, o) in out.iter_mut().enumerate() {
            let off = self.left * (x + self.mode * b);
            *o = self.data[off..off + self.left].iter().zip(row).map(|(u, r)| u * r).sum();
        }
    }

    /// `U(:, x, :) · col` for a column vector of length `right`.
    #[inline]
    pub(crate) fn slice_times_col(&self, x: usize, col: &[f64], out: &mut [f64]) {
        debug_assert_eq!(col.len(), self.right);
        debug_assert_eq!(out.len(), self.left);
        out.iter_mut().for_each(|v| *v = 0.0);
        for (b, &c) in col.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let off = self.left * (x + self.mode * b);
            for (o, u) in out.iter_mut().zip(&self.data[off..off + self.left]) {
                *o += u * c;
            }
        }
    }
}

/// TT ranks `(r_1, …, r_{m-1})`; `r_0 = r_m = 1` are implicit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankVector(Vec<usize>);

impl RankVector {
    pub fn new(ranks: Vec<usize>) -> Result<Self> {
        ensure!(ranks.iter().all(|&r| r >= 1), Domain, "TT ranks must be positive, got {ranks:?}");
        Ok(Self(ranks))
    }

    pub fn uniform(order: usize, r: usize) -> Result<Self> {
        Self::new(vec![r; order.saturating_sub(1)])
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Rank with boundary convention: `full(0) == full(m) == 1`.
    pub fn full(&self, i: usize) -> usize {
        if i == 0 || i > self.0.len() {
            1
        } else {
            self.0[i - 1]
        }
    }

    pub fn max(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(1)
    }

    pub fn doubled(&self) -> Self {
        Self(self.0.iter().map(|r| 2 * r).collect())
    }

    /// Checks that a tensor of shape `dims` admits this rank: each `r_i` is
    /// bounded by both separation sizes and by its neighbours
    /// (`r_i ≤ r_{i-1}·d_i`, `r_i ≤ d_{i+1}·r_{i+1}`).
    pub fn check_feasible(&self, dims: &[usize]) -> Result<()> {
        let m = dims.len();
        ensure!(
            self.0.len() + 1 == m,
            ShapeMismatch,
            "rank vector of length {} for an order-{m} tensor",
            self.0.len()
        );
        for i in 1..m {
            let r = self.full(i);
            let left: usize = dims[..i].iter().product();
            let right: usize = dims[i..].iter().product();
            ensure!(r <= left.min(right), Domain, "rank r_{i} = {r} exceeds min({left}, {right}) for dims {dims:?}");
            ensure!(r <= self.full(i - 1) * dims[i - 1], Domain, "rank r_{i} = {r} exceeds r_{}·d_{i}", i - 1);
            ensure!(r <= dims[i] * self.full(i + 1), Domain, "rank r_{i} = {r} exceeds d_{}·r_{}", i + 1, i + 1);
        }
        Ok(())
    }
}

impl std::fmt::Display for RankVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|r| r.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Tensor in TT format: `T(x_1,…,x_m) = T_1(x_1,:)·T_2(:,x_2,:)⋯T_m(:,x_m)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TtTensor {
    cores: Vec<Core>,
}

impl TtTensor {
    pub fn new(cores: Vec<Core>) -> Result<Self> {
        ensure!(!cores.is_empty(), Domain, "a TT tensor needs at least one core");
        ensure!(cores[0].left == 1, ShapeMismatch, "first core must have left rank 1, got {}", cores[0].left);
        ensure!(
            cores[cores.len() - 1].right == 1,
            ShapeMismatch,
            "last core must have right rank 1, got {}",
            cores[cores.len() - 1].right
        );
        for (k, w) in cores.windows(2).enumerate() {
            ensure!(
                w[0].right == w[1].left,
                ShapeMismatch,
                "core {} has right rank {} but core {} has left rank {}",
                k,
                w[0].right,
                k + 1,
                w[1].left
            );
        }
        Ok(Self { cores })
    }

    pub fn zeros(dims: &[usize], ranks: &RankVector) -> Result<Self> {
        check_dims(dims)?;
        ensure!(ranks.len() + 1 == dims.len(), ShapeMismatch, "rank vector length {} for order {}", ranks.len(), dims.len());
        let cores = dims
            .iter()
            .enumerate()
            .map(|(k, &d)| Core::zeros(ranks.full(k), d, ranks.full(k + 1)))
            .collect();
        Ok(Self { cores })
    }

    /// Rank-1 TT from one vector per mode.
    pub fn rank_one(vectors: &[Vec<f64>]) -> Result<Self> {
        let cores = vectors
            .iter()
            .map(|v| Core::new(1, v.len(), 1, v.clone()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(cores)
    }

    pub fn cores(&self) -> &[Core] {
        &self.cores
    }

    pub fn core(&self, k: usize) -> &Core {
        &self.cores[k]
    }

    pub fn into_cores(self) -> Vec<Core> {
        self.cores
    }

    pub fn order(&self) -> usize {
        self.cores.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.mode).collect()
    }

    pub fn ranks(&self) -> RankVector {
        RankVector(self.cores[..self.cores.len() - 1].iter().map(|c| c.right).collect())
    }

    pub fn num_entries(&self) -> usize {
        self.cores.iter().map(|c| c.mode).product()
    }

    /// Entry at a 0-based multi-index. Panics when out of range.
    pub fn entry(&self, idx: &[usize]) -> f64 {
        assert_eq!(idx.len(), self.order(), "index order mismatch");
        let mut row = vec![1.0];
        let mut next = Vec::new();
        for (core, &x) in self.cores.iter().zip(idx) {
            assert!(x < core.mode, "index {x} out of range for mode of size {}", core.mode);
            next.resize(core.right, 0.0);
            core.row_times_slice(&row, x, &mut next);
            std::mem::swap(&mut row, &mut next);
        }
        row[0]
    }

    /// Entry at a 1-based multi-index.
    pub fn eval_entry(&self, index: &[usize]) -> Result<f64> {
        ensure!(index.len() == self.order(), Domain, "index has {} components for order {}", index.len(), self.order());
        for (k, (&x, c)) in index.iter().zip(&self.cores).enumerate() {
            ensure!(x >= 1 && x <= c.mode, Domain, "index component {x} out of 1..={} at mode {}", c.mode, k + 1);
        }
        let zero_based: Vec<usize> = index.iter().map(|x| x - 1).collect();
        Ok(self.entry(&zero_based))
    }

    pub fn to_dense(&self) -> Result<DenseTensor> {
        self.to_dense_with_limit(DEFAULT_DENSE_LIMIT)
    }

    pub fn to_dense_with_limit(&self, max_entries: usize) -> Result<DenseTensor> {
        let dims = self.dims();
        let total = check_dims(&dims)?;
        ensure!(total <= max_entries, Capacity, "{total} entries exceed the dense limit {max_entries}");
        let full = self.left_part(self.order())?;
        DenseTensor::new(dims, full.as_slice().to_vec())
    }

    /// `T^{≤i}`: `(d_1⋯d_i) × r_i`, with `T^{≤0} = [1]`.
    pub fn left_part(&self, i: usize) -> Result<Matrix> {
        ensure!(i <= self.order(), Domain, "left part index {i} exceeds order {}", self.order());
        let mut acc = Matrix::from_element(1, 1, 1.0);
        for core in &self.cores[..i] {
            acc = extend_left_part(&acc, core);
        }
        Ok(acc)
    }

    /// `T^{≥i}`: `r_{i-1} × (d_i⋯d_m)`, with `T^{≥m+1} = [1]`.
    pub fn right_part(&self, i: usize) -> Result<Matrix> {
        let m = self.order();
        ensure!(i >= 1 && i <= m + 1, Domain, "right part index {i} outside 1..={}", m + 1);
        let mut acc = Matrix::from_element(1, 1, 1.0);
        for core in self.cores[i - 1..].iter().rev() {
            acc = extend_right_part(core, &acc);
        }
        Ok(acc)
    }

    /// Every core with its mode-2 fibers scaled by `scales[k][x]`.
    pub fn scale_modes(&self, scales: &[Vec<f64>]) -> Result<Self> {
        ensure!(scales.len() == self.order(), ShapeMismatch, "{} scale vectors for order {}", scales.len(), self.order());
        let cores = self
            .cores
            .iter()
            .zip(scales)
            .map(|(c, s)| {
                ensure!(s.len() == c.mode, ShapeMismatch, "scale vector of length {} for mode size {}", s.len(), c.mode);
                Ok(c.scale_mode(s))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { cores })
    }

    /// Multiplies the tensor by `alpha` (applied to the last core).
    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        let last = out.cores.len() - 1;
        out.cores[last].data.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// `alpha·self + beta·other` as a TT of rank `r + r'` (block-diagonal cores).
    pub fn linear_combination(&self, alpha: f64, other: &TtTensor, beta: f64) -> Result<Self> {
        ensure!(self.dims() == other.dims(), ShapeMismatch, "dims {:?} vs {:?}", self.dims(), other.dims());
        let m = self.order();
        if m == 1 {
            let c = &self.cores[0];
            let data = c.data.iter().zip(&other.cores[0].data).map(|(a, b)| alpha * a + beta * b).collect();
            return Ok(Self { cores: vec![Core::new(1, c.mode, 1, data)?] });
        }
        let mut cores = Vec::with_capacity(m);
        for k in 0..m {
            let (a, b) = (&self.cores[k], &other.cores[k]);
            let c = if k == 0 {
                // [A | B] along the right rank
                Core::from_fn(1, a.mode, a.right + b.right, |_, x, j| {
                    if j < a.right {
                        a.get(0, x, j)
                    } else {
                        b.get(0, x, j - a.right)
                    }
                })
            } else if k == m - 1 {
                // [αA ; βB] along the left rank
                Core::from_fn(a.left + b.left, a.mode, 1, |i, x, _| {
                    if i < a.left {
                        alpha * a.get(i, x, 0)
                    } else {
                        beta * b.get(i - a.left, x, 0)
                    }
                })
            } else {
                Core::from_fn(a.left + b.left, a.mode, a.right + b.right, |i, x, j| {
                    match (i < a.left, j < a.right) {
                        (true, true) => a.get(i, x, j),
                        (false, false) => b.get(i - a.left, x, j - a.right),
                        _ => 0.0,
                    }
                })
            };
            cores.push(c);
        }
        Self::new(cores)
    }

    /// Euclidean inner product of two TT tensors via transfer matrices.
    pub fn inner(&self, other: &TtTensor) -> Result<f64> {
        ensure!(self.dims() == other.dims(), ShapeMismatch, "dims {:?} vs {:?}", self.dims(), other.dims());
        // E is r_a × r_b
        let mut e = Matrix::from_element(1, 1, 1.0);
        for (a, b) in self.cores.iter().zip(&other.cores) {
            let mut next = Matrix::zeros(a.right, b.right);
            for x in 0..a.mode {
                next += a.slice(x).transpose() * &e * b.slice(x);
            }
            e = next;
        }
        Ok(e[(0, 0)])
    }

    /// Frobenius norm via a QR sweep, accurate even when entries cancel.
    pub fn fro_norm(&self) -> f64 {
        let m = self.cores.len();
        let mut carry = Matrix::from_element(1, 1, 1.0);
        for (k, core) in self.cores.iter().enumerate() {
            let c = carry_into_left(&carry, core);
            if k + 1 == m {
                return c.data.iter().map(|v| v * v).sum::<f64>().sqrt();
            }
            carry = crate::linalg::thin_qr(&c.left_unfold()).1;
        }
        unreachable!("a TT tensor has at least one core")
    }

    /// `‖self − other‖_F`, evaluated without densifying.
    pub fn distance(&self, other: &TtTensor) -> Result<f64> {
        Ok(self.linear_combination(1.0, other, -1.0)?.fro_norm())
    }

    pub fn all_finite(&self) -> bool {
        self.cores.iter().all(|c| c.data.iter().all(|v| v.is_finite()))
    }

    /// Calls `f(offset, value)` for every entry in first-fastest order.
    pub fn for_each_entry(&self, mut f: impl FnMut(&[usize], f64)) {
        let dims = self.dims();
        let total: usize = dims.iter().product();
        let mut idx = vec![0usize; dims.len()];
        for _ in 0..total {
            f(&idx, self.entry(&idx));
            increment_index(&mut idx, &dims);
        }
    }
}

/// `T^{≤i}` from `T^{≤i-1}` and core `i`: block row `x` equals `T^{≤i-1}·T_i(:,x,:)`.
pub(crate) fn extend_left_part(prev: &Matrix, core: &Core) -> Matrix {
    let p = prev.nrows();
    let mut out = Matrix::zeros(p * core.mode, core.right);
    for x in 0..core.mode {
        let block = prev * core.slice(x);
        out.view_mut((p * x, 0), (p, core.right)).copy_from(&block);
    }
    out
}

/// `T^{≥i}` from core `i` and `T^{≥i+1}`: column `x + d_i·q` equals `T_i(:,x,:)·T^{≥i+1}(:,q)`.
pub(crate) fn extend_right_part(core: &Core, next: &Matrix) -> Matrix {
    let q = next.ncols();
    let mut out = Matrix::zeros(core.left, core.mode * q);
    for x in 0..core.mode {
        let block = core.slice(x) * next;
        for c in 0..q {
            out.set_column(x + core.mode * c, &block.column(c));
        }
    }
    out
}

pub fn eval_entry(tt: &TtTensor, index: &[usize]) -> Result<f64> {
    tt.eval_entry(index)
}

pub fn to_dense(tt: &TtTensor) -> Result<DenseTensor> {
    tt.to_dense()
}

pub fn left_part(tt: &TtTensor, i: usize) -> Result<Matrix> {
    tt.left_part(i)
}

pub fn right_part(tt: &TtTensor, i: usize) -> Result<Matrix> {
    tt.right_part(i)
}

/// `max_i σ_1(T^{⟨i⟩}) / min_i σ_{r_i}(T^{⟨i⟩})`.
///
/// Separation spectra are obtained from small `r_i × r_i` factors: with
/// `T^{≤i} = Q_L R_L` and `T^{≥i+1} = L_R Q_R` the singular values of
/// `T^{⟨i⟩}` are those of `R_L L_R`.
pub fn condition_number(tt: &TtTensor) -> Result<f64> {
    let m = tt.order();
    ensure!(m >= 2, Domain, "condition number needs order ≥ 2");
    let norm = tt.fro_norm();
    ensure!(norm > 0.0 && norm.is_finite(), Domain, "condition number of a zero tensor is undefined");
    let left_r = left_r_factors(tt);
    let right_l = right_l_factors(tt);
    let mut top = 0.0f64;
    let mut bottom = f64::INFINITY;
    for i in 1..m {
        let small = &left_r[i - 1] * &right_l[i - 1];
        let s = linalg::singular_values(&small);
        let r = tt.ranks().full(i);
        top = top.max(s[0]);
        bottom = bottom.min(s.get(r - 1).copied().unwrap_or(0.0));
    }
    ensure!(bottom > 0.0, Domain, "a separation is rank deficient; condition number is infinite");
    Ok(top / bottom)
}

/// `R` factors with `T^{≤i} = Q R` for i = 1..m-1 (each `r_i × r_i` at most).
fn left_r_factors(tt: &TtTensor) -> Vec<Matrix> {
    let m = tt.order();
    let mut out = Vec::with_capacity(m - 1);
    let mut carry = Matrix::from_element(1, 1, 1.0);
    for core in &tt.cores[..m - 1] {
        let c = carry_into_left(&carry, core);
        let (_, r) = linalg::thin_qr(&c.left_unfold());
        out.push(r.clone());
        carry = r;
    }
    out
}

/// `L` factors with `T^{≥i+1} = L Q` for i = 1..m-1.
fn right_l_factors(tt: &TtTensor) -> Vec<Matrix> {
    let m = tt.order();
    let mut out = vec![Matrix::zeros(0, 0); m - 1];
    let mut carry = Matrix::from_element(1, 1, 1.0);
    for k in (1..m).rev() {
        let core = &tt.cores[k];
        let mut c = core.right_unfold();
        // absorb carry on the right: R(U)(:, x + d·b) ← Σ_c U(:,x,c)·carry(c,b)
        c = absorb_right(&c, core.mode, &carry);
        let (q, r) = linalg::thin_qr(&c.transpose());
        let _ = q;
        let l = r.transpose();
        out[k - 1] = l.clone();
        carry = l;
    }
    out
}

/// Core with `carry · U` applied on its left rank index.
pub(crate) fn carry_into_left(carry: &Matrix, core: &Core) -> Core {
    let r = carry * core.right_unfold();
    Core::from_right_unfold(core.mode, core.right, &r).expect("shape preserved")
}

/// `R(U)` with `carry` applied on the right rank index.
fn absorb_right(r_unfold: &Matrix, mode: usize, carry: &Matrix) -> Matrix {
    let left = r_unfold.nrows();
    let right = r_unfold.ncols() / mode;
    let l = Matrix::from_column_slice(left * mode, right, r_unfold.as_slice()) * carry;
    Matrix::from_column_slice(left, mode * carry.ncols(), l.as_slice())
}
