//! Riemannian gradient descent (RGD) and its preconditioned variant (PRGD)
//! for `min ½‖P_Ω(T − T*)‖_F²` over TT tensors of fixed rank.
//!
//! One iteration:
//!
//! ```text
//! G_l     = P_Ω(T_l − T*)
//! D_l     = P̃_l(W_l^{-1} G_l)     (RGD: W_l = I, plain tangent projection)
//! T_{l+1} = R(T_l − α_l D_l)       (optionally trimmed before R)
//! ```

mod config;
mod log;

use std::sync::Arc;
use std::time::Instant;

pub use config::{Algorithm, SolverConfig, StepRule, Trimming};
pub use log::{IterationLog, IterationRecord, StopReason, CSV_HEADER};

use crate::decomp::{retract, tt_svd};
use crate::error::{ensure, Error, Result};
use crate::metric::{apply_weight_power_sparse, build_weights, EpsilonRule, ModeWeights};
use crate::problems::SparseObservations;
use crate::tangent::{ProjectionInput, TangentBase, TangentVector};
use crate::tt_core::{DenseTensor, RankVector, TtTensor};

/// Objective increases in a row that count as divergence.
pub const DIVERGENCE_WINDOW: usize = 50;
/// Iterations ignored by the soft monotonicity check.
pub const BURN_IN: usize = 10;

/// Reference tensor for relative-error reporting.
#[derive(Clone, Copy, Debug)]
pub enum Truth<'a> {
    Tt(&'a TtTensor),
    Dense(&'a DenseTensor),
}

impl Truth<'_> {
    pub fn dims(&self) -> Vec<usize> {
        match self {
            Truth::Tt(t) => t.dims(),
            Truth::Dense(d) => d.dims().to_vec(),
        }
    }

    pub fn fro_norm(&self) -> f64 {
        match self {
            Truth::Tt(t) => t.fro_norm(),
            Truth::Dense(d) => d.fro_norm(),
        }
    }

    /// `‖t − T*‖_F / ‖T*‖_F`.
    pub fn rel_error(&self, t: &TtTensor) -> Result<f64> {
        let err = match self {
            Truth::Tt(truth) => t.distance(truth)?,
            Truth::Dense(truth) => t.to_dense()?.sub(truth)?.fro_norm(),
        };
        Ok(err / self.fro_norm())
    }
}

/// `P_Ω(t) − obs`, one value per sample.
pub fn residual(t: &TtTensor, obs: &SparseObservations) -> Result<SparseObservations> {
    ensure!(t.dims() == obs.dims(), ShapeMismatch, "tensor dims {:?} vs observation dims {:?}", t.dims(), obs.dims());
    Ok(obs.map_values(|idx, v| t.entry(idx) - v))
}

/// `½ Σ values²`.
pub fn objective(res: &SparseObservations) -> f64 {
    0.5 * res.values().iter().map(|v| v * v).sum::<f64>()
}

/// TT-SVD of the rescaled zero-filled observations `p^{-1} P_Ω(T*)`.
pub fn spectral_init(obs: &SparseObservations, r: &RankVector) -> Result<TtTensor> {
    r.check_feasible(obs.dims())?;
    if obs.is_empty() {
        ::log::warn!("spectral initialization from an empty observation set gives the zero tensor");
        return TtTensor::zeros(obs.dims(), r);
    }
    let dense = obs.to_dense()?.scaled(1.0 / obs.sampling_fraction());
    tt_svd(&dense, r)
}

/// `α = ‖D‖_W² / ‖P_Ω D‖_F²` for a projected gradient `D`; `None` when the
/// denominator vanishes (nothing left to do along `D`).
fn adaptive_step(v: &TangentVector, obs: &SparseObservations) -> Option<f64> {
    let den: f64 = v.values_at(obs).iter().map(|x| x * x).sum();
    let num = v.weighted_norm().powi(2);
    (den > 0.0 && num > 0.0).then(|| num / den)
}

/// Exact line minimizer of the objective along the Euclidean projected gradient.
pub fn rgd_adaptive_step(g_proj: &TangentVector, obs: &SparseObservations) -> Result<Option<f64>> {
    ensure!(g_proj.base().weights().is_identity(), Contract, "plain gradient step needs identity weights");
    Ok(adaptive_step(g_proj, obs))
}

/// Exact line minimizer of the objective along `P̃ W^{-1} G`.
pub fn prgd_adaptive_step(v: &TangentVector, w: &ModeWeights, obs: &SparseObservations) -> Result<Option<f64>> {
    ensure!(v.base().weights() == w, Contract, "step weights differ from the projection weights");
    Ok(adaptive_step(v, obs))
}

/// `1.001 · ε^{1/2} / p`.
pub fn theory_step(w: &ModeWeights, p: f64) -> Result<f64> {
    ensure!(p > 0.0 && p <= 1.0, Domain, "sampling fraction must lie in (0, 1], got {p}");
    Ok(1.001 * w.epsilon().sqrt() / p)
}

/// `α · ε^{1/2}`: the raw step `α` for RGD (`ε = 1`), scale-free for PRGD.
pub fn constant_step(alpha: f64, w: &ModeWeights) -> f64 {
    alpha * w.epsilon().sqrt()
}

/// Clips every entry to `[−ζ, ζ]`.
pub fn trim(x: &DenseTensor, zeta: f64) -> DenseTensor {
    let mut out = x.clone();
    for v in out.values_mut() {
        if v.abs() >= zeta {
            *v = zeta.copysign(*v);
        }
    }
    out
}

/// [`trim`] for a TT tensor; the result is stored exactly at full TT rank.
pub fn trim_tt(x: &TtTensor, zeta: f64) -> Result<TtTensor> {
    let dense = trim(&x.to_dense_with_limit(crate::decomp::DENSE_RETRACTION_LIMIT)?, zeta);
    let dims = dense.dims().to_vec();
    let full: Vec<usize> = (1..dims.len())
        .map(|i| dims[..i].iter().product::<usize>().min(dims[i..].iter().product()))
        .collect();
    tt_svd(&dense, &RankVector::new(full)?)
}

/// `ξ = (10 ‖W‖_F / (9 √d*)) · ν`.
pub fn trim_threshold(candidate_norm: f64, num_entries: usize, nu: f64) -> f64 {
    10.0 * candidate_norm / (9.0 * (num_entries as f64).sqrt()) * nu
}

/// Weights and the projected search direction at `t` for gradient `grad`.
pub fn search_direction(
    t: &TtTensor,
    grad: &SparseObservations,
    algorithm: Algorithm,
    rule: EpsilonRule,
) -> Result<(ModeWeights, TangentVector)> {
    let w = match algorithm {
        Algorithm::Rgd => ModeWeights::identity(&t.dims()),
        Algorithm::Prgd => build_weights(grad, rule)?,
    };
    let base: Arc<TangentBase> = TangentBase::new(t, &w)?;
    let v = match algorithm {
        Algorithm::Rgd => base.project(ProjectionInput::Sparse(grad))?,
        Algorithm::Prgd => base.project(ProjectionInput::Sparse(&apply_weight_power_sparse(grad, &w, -1.0)?))?,
    };
    Ok((w, v))
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub tensor: TtTensor,
    pub log: IterationLog,
}

/// Runs the configured solver from the spectral initialization.
pub fn solve(obs: &SparseObservations, r: &RankVector, cfg: &SolverConfig, truth: Option<Truth<'_>>) -> Result<Solution> {
    ensure!(!obs.is_empty(), Domain, "no observations");
    let init = spectral_init(obs, r)?;
    solve_from(init, obs, r, cfg, truth)
}

/// Runs the configured solver from a given starting point of rank `r`.
pub fn solve_from(
    init: TtTensor,
    obs: &SparseObservations,
    r: &RankVector,
    cfg: &SolverConfig,
    truth: Option<Truth<'_>>,
) -> Result<Solution> {
    let dims = obs.dims().to_vec();
    ensure!(!obs.is_empty(), Domain, "no observations");
    ensure!(init.dims() == dims, ShapeMismatch, "initial point dims {:?} vs {:?}", init.dims(), dims);
    ensure!(init.ranks() == *r, ShapeMismatch, "initial point rank {} vs {}", init.ranks(), r);
    r.check_feasible(&dims)?;
    if let Some(tr) = &truth {
        ensure!(tr.dims() == dims, ShapeMismatch, "truth dims {:?} vs {:?}", tr.dims(), dims);
        ensure!(tr.fro_norm() > 0.0, Domain, "truth is the zero tensor");
    }
    let num_entries: usize = dims.iter().product();
    cfg.validate(num_entries)?;
    let p = obs.sampling_fraction().min(1.0);
    let start = Instant::now();

    let mut log = IterationLog::new();
    let mut t = init;
    let mut prev_objective = f64::INFINITY;
    let mut increases = 0usize;
    let mut pending_stop: Option<StopReason> = None;
    let mut l = 0usize;
    loop {
        let res = residual(&t, obs)?;
        let f = objective(&res);
        let rel_error = truth.as_ref().map(|tr| tr.rel_error(&t)).transpose()?;
        if !f.is_finite() || !t.all_finite() || rel_error.is_some_and(|e| !e.is_finite()) {
            return Err(Error::NonFinite(format!("non-finite iterate at iteration {l}")));
        }
        let mut record = IterationRecord {
            iter: l,
            objective: f,
            residual_norm: (2.0 * f).sqrt(),
            rel_error,
            step: None,
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        };

        if f > prev_objective {
            increases += 1;
            if increases >= DIVERGENCE_WINDOW {
                return Err(Error::Divergence(format!(
                    "objective increased for {DIVERGENCE_WINDOW} consecutive iterations (iteration {l}, objective {f:e}, step rule {})",
                    cfg.step
                )));
            }
        } else {
            increases = 0;
        }
        prev_objective = f;

        let stop = pending_stop
            .or_else(|| rel_error.filter(|&e| e <= cfg.rel_tol).map(|_| StopReason::RelativeError))
            .or_else(|| (f == 0.0).then_some(StopReason::Stationary))
            .or_else(|| (l >= cfg.max_iters).then_some(StopReason::MaxIters));
        if let Some(reason) = stop {
            log.records.push(record);
            log.stop_reason = Some(reason);
            break;
        }

        let (w, v) = search_direction(&t, &res, cfg.algorithm, cfg.epsilon_rule)?;
        let step = match cfg.step {
            StepRule::Adaptive => adaptive_step(&v, obs),
            StepRule::Constant(a) => Some(constant_step(a, &w)),
            StepRule::Theory => Some(theory_step(&w, p)?),
        };
        let step = match step {
            Some(a) if !v.is_zero() => a,
            _ => {
                log.records.push(record);
                log.stop_reason = Some(StopReason::Stationary);
                break;
            }
        };
        record.step = Some(step);
        if l % cfg.log_every == 0 {
            log.records.push(record);
        }

        let candidate = v.combine_with_base(1.0, -step);
        let next = match cfg.trimming {
            Trimming::Off => retract(&candidate, r, cfg.retraction)?,
            Trimming::On(nu) => {
                let zeta = trim_threshold(candidate.fro_norm(), num_entries, nu);
                tt_svd(&trim(&candidate.to_dense()?, zeta), r)?
            }
        };
        let change = next.distance(&t)?;
        if change <= cfg.iterate_change_tol * t.fro_norm().max(1.0) {
            pending_stop = Some(StopReason::IterateChange);
        }
        t = next;
        l += 1;
    }
    log.iterations = l;
    monotonicity_check(&mut log);
    Ok(Solution { tensor: t, log })
}

/// Soft check: warns when the relative error rises after the burn-in.
fn monotonicity_check(log: &mut IterationLog) {
    let errs: Vec<(usize, f64)> = log.records.iter().filter_map(|r| r.rel_error.map(|e| (r.iter, e))).collect();
    let rises = errs.windows(2).filter(|w| w[0].0 >= BURN_IN && w[1].1 > w[0].1).count();
    if rises > 0 {
        let msg = format!("relative error increased {rises} time(s) after iteration {BURN_IN}");
        ::log::warn!("{msg}");
        log.warnings.push(msg);
    }
}
