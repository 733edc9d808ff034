use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::error::{ensure, Error, Result};
use crate::tt_core::{check_dims, linear_offset, multi_index, DenseTensor, TtTensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SamplingMode {
    WithReplacement,
    #[default]
    WithoutReplacement,
}

/// Observed entries `P_Ω(T)`: a list of (0-based multi-index, value) pairs.
///
/// Duplicate indices are only legal for [`SamplingMode::WithReplacement`];
/// they are summed when densified.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseObservations {
    dims: Vec<usize>,
    /// `len() × order()` indices, entry-major.
    indices: Vec<usize>,
    values: Vec<f64>,
    mode: SamplingMode,
}

impl SparseObservations {
    pub fn new(dims: Vec<usize>, indices: Vec<Vec<usize>>, values: Vec<f64>, mode: SamplingMode) -> Result<Self> {
        let flat: Vec<usize> = indices.iter().flat_map(|i| i.iter().copied()).collect();
        ensure!(
            indices.iter().all(|i| i.len() == dims.len()),
            ShapeMismatch,
            "every index must have {} components",
            dims.len()
        );
        Self::from_flat(dims, flat, values, mode)
    }

    pub fn from_flat(dims: Vec<usize>, indices: Vec<usize>, values: Vec<f64>, mode: SamplingMode) -> Result<Self> {
        check_dims(&dims)?;
        let m = dims.len();
        ensure!(
            indices.len() == values.len() * m,
            ShapeMismatch,
            "{} index components for {} values of order {m}",
            indices.len(),
            values.len()
        );
        for chunk in indices.chunks(m) {
            for (k, (&x, &d)) in chunk.iter().zip(&dims).enumerate() {
                ensure!(x < d, Domain, "index {x} out of range for mode {k} of size {d}");
            }
        }
        let obs = Self { dims, indices, values, mode };
        if mode == SamplingMode::WithoutReplacement {
            let mut offs = obs.offsets();
            offs.sort_unstable();
            ensure!(offs.windows(2).all(|w| w[0] != w[1]), Domain, "duplicate index in without-replacement observations");
        }
        Ok(obs)
    }

    pub fn empty(dims: Vec<usize>) -> Result<Self> {
        Self::from_flat(dims, Vec::new(), Vec::new(), SamplingMode::WithoutReplacement)
    }

    /// Reads `source` at the given 0-based flat offsets.
    pub fn from_offsets(
        dims: Vec<usize>,
        offsets: &[usize],
        mode: SamplingMode,
        mut value_at: impl FnMut(&[usize]) -> f64,
    ) -> Result<Self> {
        let m = dims.len();
        let mut indices = Vec::with_capacity(offsets.len() * m);
        let mut values = Vec::with_capacity(offsets.len());
        for &o in offsets {
            let idx = multi_index(&dims, o);
            values.push(value_at(&idx));
            indices.extend_from_slice(&idx);
        }
        Self::from_flat(dims, indices, values, mode)
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

    pub fn mode(&self) -> SamplingMode {
        self.mode
    }

    pub fn num_entries_total(&self) -> usize {
        self.dims.iter().product()
    }

    /// `p = n / d*`.
    pub fn sampling_fraction(&self) -> f64 {
        self.len() as f64 / self.num_entries_total() as f64
    }

    pub fn index(&self, k: usize) -> &[usize] {
        let m = self.order();
        &self.indices[k * m..(k + 1) * m]
    }

    pub fn flat_indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn value(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[usize], f64)> + '_ {
        self.indices.chunks(self.order()).zip(self.values.iter().copied())
    }

    pub fn offsets(&self) -> Vec<usize> {
        self.indices.chunks(self.order()).map(|i| linear_offset(&self.dims, i)).collect()
    }

    /// Same index set with new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        ensure!(values.len() == self.len(), ShapeMismatch, "{} values for {} entries", values.len(), self.len());
        Ok(Self { dims: self.dims.clone(), indices: self.indices.clone(), values, mode: self.mode })
    }

    pub fn map_values(&self, mut f: impl FnMut(&[usize], f64) -> f64) -> Self {
        let values = self.iter().map(|(i, v)| f(i, v)).collect();
        Self { dims: self.dims.clone(), indices: self.indices.clone(), values, mode: self.mode }
    }

    /// Duplicates merged (values summed) and entries sorted by flat offset.
    pub fn coalesced(&self) -> Self {
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        for (o, v) in self.offsets().into_iter().zip(&self.values) {
            *acc.entry(o).or_insert(0.0) += v;
        }
        let m = self.order();
        let mut indices = Vec::with_capacity(acc.len() * m);
        let mut values = Vec::with_capacity(acc.len());
        for (o, v) in acc {
            indices.extend(multi_index(&self.dims, o));
            values.push(v);
        }
        Self { dims: self.dims.clone(), indices, values, mode: SamplingMode::WithoutReplacement }
    }

    /// Dense tensor that is zero off `Ω` (duplicates summed).
    pub fn to_dense(&self) -> Result<DenseTensor> {
        let mut out = DenseTensor::zeros(self.dims.clone())?;
        for (o, v) in self.offsets().into_iter().zip(&self.values) {
            out.values_mut()[o] += v;
        }
        Ok(out)
    }

    pub fn fro_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Text format: one line per entry, `i1,…,im,value` with 1-based indices.
    pub fn write_text<W: Write>(&self, w: &mut W) -> Result<()> {
        for (idx, v) in self.iter() {
            for x in idx {
                write!(w, "{},", x + 1)?;
            }
            writeln!(w, "{v:?}")?;
        }
        Ok(())
    }

    /// Parses the text format. Blank lines and lines starting with `#` are skipped.
    /// Any repeated index marks the set as sampled with replacement.
    pub fn read_text<R: BufRead>(r: R, dims: Vec<usize>) -> Result<Self> {
        let m = dims.len();
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = t.split(',').map(str::trim).collect();
            ensure!(fields.len() == m + 1, Format, "line {}: expected {} fields, got {}", lineno + 1, m + 1, fields.len());
            for (k, f) in fields[..m].iter().enumerate() {
                let x: usize = f.parse().map_err(|_| Error::Format(format!("line {}: bad index {f:?}", lineno + 1)))?;
                ensure!(x >= 1 && x <= dims[k], Format, "line {}: index {x} outside 1..={}", lineno + 1, dims[k]);
                indices.push(x - 1);
            }
            let v: f64 = fields[m].parse().map_err(|_| Error::Format(format!("line {}: bad value {:?}", lineno + 1, fields[m])))?;
            values.push(v);
        }
        let probe = Self { dims: dims.clone(), indices: indices.clone(), values: values.clone(), mode: SamplingMode::WithReplacement };
        let mut offs = probe.offsets();
        offs.sort_unstable();
        let mode = if offs.windows(2).any(|w| w[0] == w[1]) {
            SamplingMode::WithReplacement
        } else {
            SamplingMode::WithoutReplacement
        };
        Self::from_flat(dims, indices, values, mode)
    }
}

/// `P_Ω(x)` for a TT tensor.
pub fn observe_tt(t: &TtTensor, pattern: &SparseObservations) -> Result<SparseObservations> {
    ensure!(t.dims() == pattern.dims(), ShapeMismatch, "dims {:?} vs {:?}", t.dims(), pattern.dims());
    Ok(pattern.map_values(|i, _| t.entry(i)))
}
