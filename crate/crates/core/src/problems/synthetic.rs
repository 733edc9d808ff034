use rand::distributions::{Distribution, Uniform};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::observations::{SamplingMode, SparseObservations};
use crate::error::{ensure, Result};
use crate::tt_core::{check_dims, linear_offset, Core, DenseTensor, RankVector, TtTensor};

/// Dense sizes up to which the noise tensor is drawn in full.
pub const DENSE_NOISE_LIMIT: usize = 1_000_000;

/// Anything whose entries can be read at a 0-based multi-index.
pub trait EntrySource {
    fn dims(&self) -> Vec<usize>;
    fn value_at(&self, idx: &[usize]) -> f64;
}

impl EntrySource for TtTensor {
    fn dims(&self) -> Vec<usize> {
        TtTensor::dims(self)
    }

    fn value_at(&self, idx: &[usize]) -> f64 {
        self.entry(idx)
    }
}

impl EntrySource for DenseTensor {
    fn dims(&self) -> Vec<usize> {
        DenseTensor::dims(self).to_vec()
    }

    fn value_at(&self, idx: &[usize]) -> f64 {
        self.get(idx)
    }
}

/// Dimension of the manifold of TT rank `r`: `Σ r_{k−1} d_k r_k − Σ r_k²`.
pub fn manifold_dim(dims: &[usize], r: &RankVector) -> Result<usize> {
    check_dims(dims)?;
    ensure!(r.len() + 1 == dims.len(), ShapeMismatch, "{} ranks for order {}", r.len(), dims.len());
    let params: usize = dims.iter().enumerate().map(|(k, &d)| r.full(k) * d * r.full(k + 1)).sum();
    let gauge: usize = r.as_slice().iter().map(|x| x * x).sum();
    Ok(params.saturating_sub(gauge))
}

/// Number of samples for oversampling ratio `os`, rounded and clamped to `[1, d*]`.
pub fn os_to_n(dims: &[usize], r: &RankVector, os: f64) -> Result<usize> {
    ensure!(os > 0.0 && os.is_finite(), Domain, "oversampling ratio must be positive, got {os}");
    let total = check_dims(dims)?;
    let n = (os * manifold_dim(dims, r)? as f64).round();
    Ok((n as usize).clamp(1, total))
}

/// TT tensor with i.i.d. Uniform[0,1) core entries.
pub fn gen_synthetic_tt(dims: &[usize], r: &RankVector, seed: u64) -> Result<TtTensor> {
    check_dims(dims)?;
    r.check_feasible(dims)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Uniform::new(0.0, 1.0);
    let cores = dims
        .iter()
        .enumerate()
        .map(|(k, &d)| Core::from_fn(r.full(k), d, r.full(k + 1), |_, _, _| unit.sample(&mut rng)))
        .collect();
    TtTensor::new(cores)
}

/// Draws `n` entry positions uniformly at random and reads their values.
pub fn sample_uniform<S: EntrySource + ?Sized>(source: &S, n: usize, seed: u64, mode: SamplingMode) -> Result<SparseObservations> {
    let dims = source.dims();
    let total = check_dims(&dims)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offsets: Vec<usize> = match mode {
        SamplingMode::WithoutReplacement => {
            ensure!(n <= total, Domain, "cannot draw {n} distinct entries from {total}");
            let mut v = index::sample(&mut rng, total, n).into_vec();
            v.sort_unstable();
            v
        }
        SamplingMode::WithReplacement => (0..n).map(|_| rng.gen_range(0..total)).collect(),
    };
    SparseObservations::from_offsets(dims, &offsets, mode, |idx| source.value_at(idx))
}

/// Noisy observations `T*(x) + δ·E(x)` on `Ω`.
#[derive(Clone, Debug)]
pub struct NoisyObservations {
    pub obs: SparseObservations,
    pub delta: f64,
    /// `‖E‖_F`, exact or (above [`DENSE_NOISE_LIMIT`]) its expectation `√d*`.
    pub noise_norm: f64,
    pub noise_norm_estimated: bool,
}

/// `δ = σ·‖P_Ω(T*)‖_F / ‖E‖_F` with `E` i.i.d. standard normal over the full tensor.
pub fn add_noise<S: EntrySource + ?Sized>(truth: &S, obs: &SparseObservations, sigma: f64, seed: u64) -> Result<NoisyObservations> {
    ensure!(sigma >= 0.0 && sigma.is_finite(), Domain, "noise level must be non-negative, got {sigma}");
    let dims = truth.dims();
    ensure!(dims == obs.dims(), ShapeMismatch, "truth dims {:?} vs observation dims {:?}", dims, obs.dims());
    let total = check_dims(&dims)?;
    if sigma == 0.0 {
        return Ok(NoisyObservations { obs: obs.clone(), delta: 0.0, noise_norm: 0.0, noise_norm_estimated: false });
    }
    let clean = obs.map_values(|idx, _| truth.value_at(idx));
    let clean_norm = clean.fro_norm();
    let (noise_on_omega, noise_norm, estimated): (Vec<f64>, f64, bool) = if total <= DENSE_NOISE_LIMIT {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e: Vec<f64> = (0..total).map(|_| rng.sample(StandardNormal)).collect();
        let norm = e.iter().map(|v| v * v).sum::<f64>().sqrt();
        (obs.offsets().into_iter().map(|o| e[o]).collect(), norm, false)
    } else {
        let vals = obs.iter().map(|(idx, _)| lazy_normal(seed, linear_offset(&dims, idx))).collect();
        ::log::warn!("noise norm for {total} entries taken as its expectation sqrt(d*)");
        (vals, (total as f64).sqrt(), true)
    };
    let delta = sigma * clean_norm / noise_norm;
    let values = clean.values().iter().zip(&noise_on_omega).map(|(c, e)| c + delta * e).collect();
    Ok(NoisyObservations { obs: clean.with_values(values)?, delta, noise_norm, noise_norm_estimated: estimated })
}

/// Standard normal value attached to a flat offset, independent of evaluation order.
fn lazy_normal(seed: u64, offset: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(offset as u64);
    rng.sample(StandardNormal)
}

/// `10·log10(d*·max(T*)² / ‖T − T*‖_F²)` in dB; `+∞` for an exact match.
pub fn psnr(recovered: &DenseTensor, truth: &DenseTensor) -> Result<f64> {
    let err = recovered.sub(truth)?.fro_norm();
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    let peak = truth.max_value();
    Ok(10.0 * ((truth.len() as f64) * peak * peak / (err * err)).log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::numerical_rank;

    #[test]
    fn dimension_formula() {
        let r = RankVector::new(vec![5, 5]).unwrap();
        assert_eq!(manifold_dim(&[100, 100, 100], &r).unwrap(), 3450);
        assert_eq!(os_to_n(&[100, 100, 100], &r, 7.0).unwrap(), 24150);
        let ones = RankVector::uniform(5, 1).unwrap();
        assert_eq!(manifold_dim(&[6; 5], &ones).unwrap(), 5 * 6 - 4);
        assert_eq!(os_to_n(&[2, 2], &RankVector::new(vec![1]).unwrap(), 1000.0).unwrap(), 4);
        assert!(os_to_n(&[2, 2], &RankVector::new(vec![1]).unwrap(), 0.0).is_err());
    }

    #[test]
    fn synthetic_tensor_properties() {
        let dims = [6, 7, 6];
        let r = RankVector::new(vec![2, 3]).unwrap();
        let a = gen_synthetic_tt(&dims, &r, 11).unwrap();
        let b = gen_synthetic_tt(&dims, &r, 11).unwrap();
        assert_eq!(a, b);
        let dense = a.to_dense().unwrap();
        assert!(dense.values().iter().all(|&v| v > 0.0));
        assert_eq!(numerical_rank(&dense.separation(1).unwrap(), 1e-10), 2);
        assert_eq!(numerical_rank(&dense.separation(2).unwrap(), 1e-10), 3);
        assert!(gen_synthetic_tt(&dims, &RankVector::new(vec![7, 3]).unwrap(), 1).is_err());
    }

    #[test]
    fn sampling_modes() {
        let t = gen_synthetic_tt(&[3, 3, 3], &RankVector::new(vec![1, 1]).unwrap(), 1).unwrap();
        let full = sample_uniform(&t, 27, 5, SamplingMode::WithoutReplacement).unwrap();
        assert_eq!(full.offsets(), (0..27).collect::<Vec<_>>());
        assert!(sample_uniform(&t, 28, 5, SamplingMode::WithoutReplacement).is_err());
        let with = sample_uniform(&t, 200, 5, SamplingMode::WithReplacement).unwrap();
        assert_eq!(with.len(), 200);
        assert_eq!(sample_uniform(&t, 10, 9, SamplingMode::WithoutReplacement).unwrap(), sample_uniform(&t, 10, 9, SamplingMode::WithoutReplacement).unwrap());
    }

    #[test]
    fn psnr_formula() {
        let n = 1000;
        let truth = DenseTensor::from_fn(vec![10, 10, 10], |i| if i == [0, 0, 0] { 1.0 } else { 0.5 }).unwrap();
        // ‖T − T*‖² = N·1e-4
        let rec = DenseTensor::from_fn(vec![10, 10, 10], |i| truth.get(i) + 1e-2).unwrap();
        assert!((psnr(&rec, &truth).unwrap() - 40.0).abs() < 1e-9);
        let rec2 = DenseTensor::from_fn(vec![10, 10, 10], |i| truth.get(i) + 2e-2).unwrap();
        let drop = psnr(&rec, &truth).unwrap() - psnr(&rec2, &truth).unwrap();
        assert!((drop - 20.0 * 2f64.log10()).abs() < 1e-9);
        assert_eq!(psnr(&truth, &truth).unwrap(), f64::INFINITY);
        assert_eq!(truth.len(), n);
    }

    #[test]
    fn lazy_noise_is_order_independent() {
        assert_eq!(lazy_normal(3, 17), lazy_normal(3, 17));
        assert_ne!(lazy_normal(3, 17), lazy_normal(3, 18));
    }
}
