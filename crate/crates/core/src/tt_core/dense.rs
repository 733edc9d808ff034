use crate::error::{ensure, Error, Result};
use crate::linalg::Matrix;

/// Full `m`-way array of `f64` values.
///
/// Values are stored with the first index varying fastest, so the flat offset of
/// `(x_1, …, x_m)` is `x_1 + d_1·(x_2 + d_2·(x_3 + …))`. Every reshaping in the
/// crate (separations, unfoldings, core unfoldings) uses this grouping.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    values: Vec<f64>,
}

/// Validates a shape and returns its number of entries.
pub fn check_dims(dims: &[usize]) -> Result<usize> {
    ensure!(!dims.is_empty(), Domain, "tensor order must be at least 1");
    ensure!(dims.iter().all(|&d| d >= 1), Domain, "every dimension must be positive, got {dims:?}");
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Capacity(format!("dimension product overflows for {dims:?}")))
}

impl DenseTensor {
    pub fn new(dims: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let total = check_dims(&dims)?;
        ensure!(
            values.len() == total,
            ShapeMismatch,
            "{} values for dims {dims:?} (expected {total})",
            values.len()
        );
        Ok(Self { dims, values })
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        let total = check_dims(&dims)?;
        Ok(Self { dims, values: vec![0.0; total] })
    }

    /// Builds a tensor from a function of the 0-based multi-index.
    pub fn from_fn(dims: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let total = check_dims(&dims)?;
        let mut values = Vec::with_capacity(total);
        let mut idx = vec![0usize; dims.len()];
        for _ in 0..total {
            values.push(f(&idx));
            increment_index(&mut idx, &dims);
        }
        Ok(Self { dims, values })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Flat offset of a 0-based multi-index. Panics when out of range.
    pub fn offset(&self, idx: &[usize]) -> usize {
        linear_offset(&self.dims, idx)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.values[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let o = self.offset(idx);
        self.values[o] = v;
    }

    /// The `i`-th separation: rows group modes `1..=i`, columns modes `i+1..=m`.
    pub fn separation(&self, i: usize) -> Result<Matrix> {
        let m = self.order();
        ensure!(i >= 1 && i < m, Domain, "separation index {i} outside 1..={}", m.saturating_sub(1));
        let rows: usize = self.dims[..i].iter().product();
        let cols = self.len() / rows;
        Ok(Matrix::from_column_slice(rows, cols, &self.values))
    }

    /// Inverse of [`separation`](Self::separation).
    pub fn from_separation(dims: Vec<usize>, i: usize, mat: &Matrix) -> Result<Self> {
        let total = check_dims(&dims)?;
        ensure!(i >= 1 && i < dims.len(), Domain, "separation index {i} out of range");
        let rows: usize = dims[..i].iter().product();
        ensure!(
            mat.nrows() == rows && mat.ncols() * rows == total,
            ShapeMismatch,
            "matrix {}x{} does not fit dims {dims:?} at separation {i}",
            mat.nrows(),
            mat.ncols()
        );
        Ok(Self { dims, values: mat.as_slice().to_vec() })
    }

    /// Mode-`mode` unfolding (0-based mode): a `d_mode × (d*/d_mode)` matrix whose
    /// row `k` holds the slice with `x_mode = k`, remaining indices grouped first-fastest.
    pub fn mode_unfold(&self, mode: usize) -> Result<Matrix> {
        ensure!(mode < self.order(), Domain, "mode {mode} out of range for order {}", self.order());
        let (inner, n, outer) = self.mode_split(mode);
        let mut mat = Matrix::zeros(n, inner * outer);
        for b in 0..outer {
            for k in 0..n {
                let src = inner * (k + n * b);
                for a in 0..inner {
                    mat[(k, a + inner * b)] = self.values[src + a];
                }
            }
        }
        Ok(mat)
    }

    pub fn mode_fold(dims: Vec<usize>, mode: usize, mat: &Matrix) -> Result<Self> {
        let total = check_dims(&dims)?;
        ensure!(mode < dims.len(), Domain, "mode {mode} out of range");
        let n = dims[mode];
        ensure!(
            mat.nrows() == n && mat.ncols() * n == total,
            ShapeMismatch,
            "matrix {}x{} cannot fold into {dims:?} along mode {mode}",
            mat.nrows(),
            mat.ncols()
        );
        let inner: usize = dims[..mode].iter().product();
        let outer: usize = dims[mode + 1..].iter().product();
        let mut values = vec![0.0; total];
        for b in 0..outer {
            for k in 0..n {
                let dst = inner * (k + n * b);
                for a in 0..inner {
                    values[dst + a] = mat[(k, a + inner * b)];
                }
            }
        }
        Ok(Self { dims, values })
    }

    /// `self ×_mode m`: replaces `d_mode` by `m.nrows()`.
    pub fn mode_product(&self, mode: usize, m: &Matrix) -> Result<Self> {
        ensure!(mode < self.order(), Domain, "mode {mode} out of range for order {}", self.order());
        ensure!(
            m.ncols() == self.dims[mode],
            ShapeMismatch,
            "matrix has {} columns, mode {mode} has size {}",
            m.ncols(),
            self.dims[mode]
        );
        let unfolded = m * self.mode_unfold(mode)?;
        let mut dims = self.dims.clone();
        dims[mode] = m.nrows();
        Self::mode_fold(dims, mode, &unfolded)
    }

    /// Euclidean norms of the mode-`mode` slices.
    pub fn slice_norms(&self, mode: usize) -> Result<Vec<f64>> {
        ensure!(mode < self.order(), Domain, "mode {mode} out of range");
        let (inner, n, outer) = self.mode_split(mode);
        let mut acc = vec![0.0; n];
        for b in 0..outer {
            for k in 0..n {
                let src = inner * (k + n * b);
                acc[k] += self.values[src..src + inner].iter().map(|v| v * v).sum::<f64>();
            }
        }
        Ok(acc.into_iter().map(f64::sqrt).collect())
    }

    fn mode_split(&self, mode: usize) -> (usize, usize, usize) {
        let inner: usize = self.dims[..mode].iter().product();
        let outer: usize = self.dims[mode + 1..].iter().product();
        (inner, self.dims[mode], outer)
    }

    pub fn inner(&self, other: &DenseTensor) -> Result<f64> {
        self.check_same_dims(other)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum())
    }

    pub fn fro_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// `self + alpha · other`.
    pub fn add_scaled(&self, alpha: f64, other: &DenseTensor) -> Result<Self> {
        self.check_same_dims(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + alpha * b).collect();
        Ok(Self { dims: self.dims.clone(), values })
    }

    pub fn sub(&self, other: &DenseTensor) -> Result<Self> {
        self.add_scaled(-1.0, other)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self { dims: self.dims.clone(), values: self.values.iter().map(|v| alpha * v).collect() }
    }

    pub(crate) fn check_same_dims(&self, other: &DenseTensor) -> Result<()> {
        ensure!(
            self.dims == other.dims,
            ShapeMismatch,
            "dims {:?} vs {:?}",
            self.dims,
            other.dims
        );
        Ok(())
    }
}

pub fn inner(x: &DenseTensor, y: &DenseTensor) -> Result<f64> {
    x.inner(y)
}

pub fn fro_norm(x: &DenseTensor) -> f64 {
    x.fro_norm()
}

/// Flat offset of a 0-based multi-index under the first-fastest grouping.
pub fn linear_offset(dims: &[usize], idx: &[usize]) -> usize {
    assert_eq!(dims.len(), idx.len(), "index order mismatch");
    let mut off = 0usize;
    for k in (0..dims.len()).rev() {
        assert!(idx[k] < dims[k], "index {} out of range for mode {k} of size {}", idx[k], dims[k]);
        off = off * dims[k] + idx[k];
    }
    off
}

/// Inverse of [`linear_offset`].
pub fn multi_index(dims: &[usize], mut offset: usize) -> Vec<usize> {
    dims.iter()
        .map(|&d| {
            let x = offset % d;
            offset /= d;
            x
        })
        .collect()
}

/// Advances a 0-based multi-index in first-fastest order, wrapping at the end.
pub fn increment_index(idx: &mut [usize], dims: &[usize]) {
    for k in 0..dims.len() {
        idx[k] += 1;
        if idx[k] < dims[k] {
            return;
        }
        idx[k] = 0;
    }
}
