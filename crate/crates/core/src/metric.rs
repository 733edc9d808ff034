//! Data-driven diagonal metric.
//!
//! For a gradient `G` observed on `Ω`, mode `i` gets the diagonal
//! `G_i = ε·I + diag(M_i(G) M_i(G)ᵀ)`, i.e. `ε` plus the squared norms of the
//! mode-`i` slices of `G`. The weight operator scales entry `x` by
//! `∏_i G_i(x_i)^{1/(2m)}`; power `p` of the operator scales by
//! `∏_i G_i(x_i)^{p/(2m)}`. Weights are only ever stored as diagonals.

use crate::error::{ensure, Result};
use crate::problems::SparseObservations;
use crate::tt_core::{DenseTensor, TtTensor};

/// How `ε` is chosen from the gradient.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum EpsilonRule {
    /// `ε = ‖G‖_∨²`.
    #[default]
    VeeSquared,
    /// `ε = max(‖G‖_∨², floor)`; keeps the metric invertible when `G` vanishes.
    FlooredVeeSquared(f64),
    /// `ε = c·‖G‖_∨²`.
    ScaledVeeSquared(f64),
    Fixed(f64),
}

impl EpsilonRule {
    pub const DEFAULT_FLOOR: f64 = 1e-30;

    pub fn epsilon(&self, vee: f64) -> f64 {
        match *self {
            EpsilonRule::VeeSquared => vee * vee,
            EpsilonRule::FlooredVeeSquared(floor) => (vee * vee).max(floor),
            EpsilonRule::ScaledVeeSquared(c) => c * vee * vee,
            EpsilonRule::Fixed(e) => e,
        }
    }
}

impl std::fmt::Display for EpsilonRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EpsilonRule::VeeSquared => f.write_str("vee2"),
            EpsilonRule::FlooredVeeSquared(floor) => write!(f, "floored={floor:?}"),
            EpsilonRule::ScaledVeeSquared(c) => write!(f, "scaled={c:?}"),
            EpsilonRule::Fixed(e) => write!(f, "fixed={e:?}"),
        }
    }
}

impl std::str::FromStr for EpsilonRule {
    type Err = crate::Error;

    /// Accepts `vee2`, `floored=<floor>`, `scaled=<c>` and `fixed=<ε>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "vee2" {
            return Ok(EpsilonRule::VeeSquared);
        }
        let parse = |v: &str| v.parse::<f64>().ok();
        if let Some(v) = s.strip_prefix("floored=").and_then(parse) {
            return Ok(EpsilonRule::FlooredVeeSquared(v));
        }
        if let Some(v) = s.strip_prefix("scaled=").and_then(parse) {
            return Ok(EpsilonRule::ScaledVeeSquared(v));
        }
        if let Some(v) = s.strip_prefix("fixed=").and_then(parse) {
            return Ok(EpsilonRule::Fixed(v));
        }
        Err(crate::Error::Format(format!("unknown epsilon rule {s:?}")))
    }
}

/// Squared norms of every mode-`i` slice of the (coalesced) sparse tensor.
pub fn slice_sq_norms(g: &SparseObservations) -> Vec<Vec<f64>> {
    let coalesced = g.coalesced();
    let mut out: Vec<Vec<f64>> = g.dims().iter().map(|&d| vec![0.0; d]).collect();
    for (idx, v) in coalesced.iter() {
        let v2 = v * v;
        for (acc, &x) in out.iter_mut().zip(idx) {
            acc[x] += v2;
        }
    }
    out
}

/// `‖G‖_∨`: the largest slice norm over all modes.
pub fn vee_norm(g: &SparseObservations) -> f64 {
    slice_sq_norms(g).iter().flatten().fold(0.0f64, |a, &b| a.max(b)).sqrt()
}

/// Per-mode diagonal weights and the regularizer `ε`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeWeights {
    diag: Vec<Vec<f64>>,
    epsilon: f64,
    vee_sq: f64,
}

impl ModeWeights {
    pub fn from_parts(diag: Vec<Vec<f64>>, epsilon: f64) -> Result<Self> {
        ensure!(!diag.is_empty(), Domain, "weights need at least one mode");
        ensure!(epsilon > 0.0 && epsilon.is_finite(), Domain, "epsilon must be positive and finite, got {epsilon}");
        ensure!(
            diag.iter().flatten().all(|&g| g >= epsilon && g.is_finite()),
            Domain,
            "every diagonal entry must be finite and at least epsilon"
        );
        let vee_sq = diag.iter().flatten().map(|g| g - epsilon).fold(0.0, f64::max);
        Ok(Self { diag, epsilon, vee_sq })
    }

    /// `G = 0`, `ε = 1`: the Euclidean metric.
    pub fn identity(dims: &[usize]) -> Self {
        Self { diag: dims.iter().map(|&d| vec![1.0; d]).collect(), epsilon: 1.0, vee_sq: 0.0 }
    }

    pub fn diag(&self) -> &[Vec<f64>] {
        &self.diag
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `‖G‖_∨²` of the gradient the weights were built from.
    pub fn vee_sq(&self) -> f64 {
        self.vee_sq
    }

    pub fn order(&self) -> usize {
        self.diag.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.diag.iter().map(Vec::len).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.diag.iter().flatten().all(|&g| g == 1.0)
    }

    /// Per-mode scale vectors `G_i^{power/(2m)}`.
    pub fn scales(&self, power: f64) -> Vec<Vec<f64>> {
        let e = power / (2.0 * self.order() as f64);
        self.diag.iter().map(|d| d.iter().map(|&g| (e * g.ln()).exp()).collect()).collect()
    }

    /// Lower and upper constants `(ε^{1/2}, (ε + ‖G‖_∨²)^{1/2})` of the norm equivalence
    /// `lo·‖Z‖_F² ≤ ‖Z‖_W² ≤ hi·‖Z‖_F²`.
    pub fn equivalence_bounds(&self) -> (f64, f64) {
        (self.epsilon.sqrt(), (self.epsilon + self.vee_sq).sqrt())
    }

    fn check_dims(&self, dims: &[usize]) -> Result<()> {
        ensure!(self.dims() == dims, ShapeMismatch, "weights for dims {:?} applied to {:?}", self.dims(), dims);
        Ok(())
    }
}

pub fn build_weights(g: &SparseObservations, rule: EpsilonRule) -> Result<ModeWeights> {
    let norms = slice_sq_norms(g);
    let vee_sq = norms.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
    let epsilon = rule.epsilon(vee_sq.sqrt());
    ensure!(
        epsilon > 0.0 && epsilon.is_finite(),
        Domain,
        "epsilon rule {rule:?} gave {epsilon} (vanishing gradient?)"
    );
    let diag = norms.into_iter().map(|v| v.into_iter().map(|s| epsilon + s).collect()).collect();
    Ok(ModeWeights { diag, epsilon, vee_sq })
}

/// Scales entry `x` by `∏_i G_i(x_i)^{power/(2m)}`.
pub fn apply_weight_power(x: &DenseTensor, w: &ModeWeights, power: f64) -> Result<DenseTensor> {
    w.check_dims(x.dims())?;
    if power == 0.0 {
        return Ok(x.clone());
    }
    let scales = w.scales(power);
    let dims = x.dims().to_vec();
    let mut out = x.clone();
    let mut idx = vec![0usize; dims.len()];
    for v in out.values_mut() {
        let f: f64 = scales.iter().zip(&idx).map(|(s, &i)| s[i]).product();
        *v *= f;
        crate::tt_core::increment_index(&mut idx, &dims);
    }
    Ok(out)
}

/// Sparse counterpart of [`apply_weight_power`]; cost `O(m·|Ω|)`.
pub fn apply_weight_power_sparse(x: &SparseObservations, w: &ModeWeights, power: f64) -> Result<SparseObservations> {
    w.check_dims(x.dims())?;
    let scales = w.scales(power);
    Ok(x.map_values(|idx, v| v * scales.iter().zip(idx).map(|(s, &i)| s[i]).product::<f64>()))
}

/// TT counterpart: core `i` becomes `T_i ×_2 G_i^{power/(2m)}`; ranks are unchanged.
pub fn apply_weight_power_tt(t: &TtTensor, w: &ModeWeights, power: f64) -> Result<TtTensor> {
    w.check_dims(&t.dims())?;
    t.scale_modes(&w.scales(power))
}

/// `⟨x, y⟩_W = ⟨W x, y⟩`.
pub fn weighted_inner(x: &DenseTensor, y: &DenseTensor, w: &ModeWeights) -> Result<f64> {
    x.check_same_dims(y)?;
    apply_weight_power(x, w, 1.0)?.inner(y)
}

/// `‖x‖_W = ‖W^{1/2} x‖_F`.
pub fn weighted_norm(x: &DenseTensor, w: &ModeWeights) -> Result<f64> {
    Ok(apply_weight_power(x, w, 0.5)?.fro_norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::SamplingMode;

    fn obs(dims: Vec<usize>, entries: &[(&[usize], f64)]) -> SparseObservations {
        SparseObservations::new(
            dims,
            entries.iter().map(|(i, _)| i.to_vec()).collect(),
            entries.iter().map(|(_, v)| *v).collect(),
            SamplingMode::WithoutReplacement,
        )
        .unwrap()
    }

    #[test]
    fn vee_norm_cases() {
        assert_eq!(vee_norm(&obs(vec![3, 3], &[(&[1, 2], -2.5)])), 2.5);
        // two entries in the same mode-1 slice: slice norm 5 for mode 1
        let g = obs(vec![3, 4, 2], &[(&[0, 1, 0], 3.0), (&[0, 3, 1], 4.0)]);
        let norms = slice_sq_norms(&g);
        assert_eq!(norms[0][0].sqrt(), 5.0);
        assert_eq!(vee_norm(&g), 5.0);
        assert_eq!(vee_norm(&obs(vec![2, 2], &[(&[0, 0], 0.0)])), 0.0);
        assert_eq!(vee_norm(&SparseObservations::empty(vec![2, 2]).unwrap()), 0.0);
    }

    #[test]
    fn zero_gradient_with_unit_floor_is_identity() {
        let g = SparseObservations::empty(vec![2, 3]).unwrap();
        let w = build_weights(&g, EpsilonRule::Fixed(1.0)).unwrap();
        assert!(w.is_identity());
        assert!(w.scales(1.0).iter().flatten().all(|&s| s == 1.0));
        assert!(build_weights(&g, EpsilonRule::VeeSquared).is_err());
        let floored = build_weights(&g, EpsilonRule::FlooredVeeSquared(EpsilonRule::DEFAULT_FLOOR)).unwrap();
        assert_eq!(floored.epsilon(), 1e-30);
    }

    #[test]
    fn single_entry_weights() {
        let g = obs(vec![3, 2, 2], &[(&[2, 1, 0], 0.5)]);
        let w = build_weights(&g, EpsilonRule::Fixed(0.1)).unwrap();
        for (i, &x) in [2usize, 1, 0].iter().enumerate() {
            for k in 0..w.diag()[i].len() {
                let expect = if k == x { 0.1 + 0.25 } else { 0.1 };
                assert!((w.diag()[i][k] - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn default_rule_uses_vee_squared() {
        let g = obs(vec![3, 3], &[(&[0, 1], 1.0), (&[0, 2], 2.0), (&[2, 2], -1.0)]);
        let w = build_weights(&g, EpsilonRule::default()).unwrap();
        assert!((w.epsilon() - vee_norm(&g).powi(2)).abs() < 1e-14);
        assert!((w.epsilon() - 5.0).abs() < 1e-14);
    }

    fn sample_weights() -> ModeWeights {
        let g = obs(vec![3, 4, 2], &[(&[0, 1, 0], 3.0), (&[2, 3, 1], -1.5), (&[1, 1, 1], 0.25)]);
        build_weights(&g, EpsilonRule::VeeSquared).unwrap()
    }

    fn sample_tensor() -> DenseTensor {
        DenseTensor::from_fn(vec![3, 4, 2], |i| (i[0] as f64 - 1.0) * 0.7 + i[1] as f64 * 0.3 - i[2] as f64).unwrap()
    }

    #[test]
    fn power_zero_and_inverse_pair() {
        let w = sample_weights();
        let x = sample_tensor();
        assert_eq!(apply_weight_power(&x, &w, 0.0).unwrap(), x);
        let back = apply_weight_power(&apply_weight_power(&x, &w, 1.0).unwrap(), &w, -1.0).unwrap();
        assert!(back.sub(&x).unwrap().max_abs() <= 1e-14 * x.max_abs());
    }

    #[test]
    fn half_powers_compose() {
        let w = sample_weights();
        let x = sample_tensor();
        let twice = apply_weight_power(&apply_weight_power(&x, &w, 0.5).unwrap(), &w, 0.5).unwrap();
        let once = apply_weight_power(&x, &w, 1.0).unwrap();
        // entrywise oracle
        let oracle = DenseTensor::from_fn(x.dims().to_vec(), |i| {
            let f: f64 = (0..3).map(|k| w.diag()[k][i[k]].powf(1.0 / 6.0)).product();
            x.get(i) * f
        })
        .unwrap();
        assert!(twice.sub(&once).unwrap().max_abs() < 1e-13);
        assert!(once.sub(&oracle).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn euclidean_when_identity() {
        let w = ModeWeights::identity(&[3, 4, 2]);
        let x = sample_tensor();
        let y = x.scaled(-0.5).add_scaled(1.0, &DenseTensor::new(vec![3, 4, 2], vec![0.25; 24]).unwrap()).unwrap();
        assert!((weighted_inner(&x, &y, &w).unwrap() - x.inner(&y).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn weighted_inner_is_symmetric_and_consistent_with_norm() {
        let w = sample_weights();
        let x = sample_tensor();
        let y = DenseTensor::from_fn(vec![3, 4, 2], |i| ((i[0] * 5 + i[1] * 3 + i[2]) % 7) as f64 - 3.0).unwrap();
        let xy = weighted_inner(&x, &y, &w).unwrap();
        let yx = weighted_inner(&y, &x, &w).unwrap();
        assert!((xy - yx).abs() < 1e-12 * xy.abs().max(1.0));
        let n2 = weighted_norm(&x, &w).unwrap().powi(2);
        assert!((n2 - weighted_inner(&x, &x, &w).unwrap()).abs() < 1e-12 * n2);
    }

    #[test]
    fn mismatched_dims_are_rejected() {
        let w = ModeWeights::identity(&[2, 2]);
        assert!(apply_weight_power(&sample_tensor(), &w, 1.0).is_err());
    }

    #[test]
    fn from_parts_validates() {
        assert!(ModeWeights::from_parts(vec![vec![1.0, 0.5]], 1.0).is_err());
        assert!(ModeWeights::from_parts(vec![vec![1.0, 2.0]], 0.0).is_err());
        let w = ModeWeights::from_parts(vec![vec![1.0, 2.0], vec![1.5]], 1.0).unwrap();
        assert_eq!(w.vee_sq(), 1.0);
    }
}
