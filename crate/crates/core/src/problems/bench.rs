use crate::error::{Error, Result};
use crate::problems::SparseObservations;
use crate::solver::{solve, Solution, SolverConfig, StepRule, Truth};
use crate::tt_core::RankVector;

/// Constant step multipliers searched for the "best constant step".
pub const STEP_GRID: [f64; 5] = [0.5, 1.0, 2.0, 4.0, 8.0];

#[derive(Clone, Debug, PartialEq)]
pub enum GridTrial {
    /// Reached the relative-error target after this many iterations.
    Converged(usize),
    /// Stopped without reaching the target; final relative error.
    Unconverged(f64),
    /// Not run: the iteration cap left by better steps was zero.
    Skipped,
    Failed(String),
}

#[derive(Clone, Debug)]
pub struct GridOutcome {
    pub alpha: f64,
    pub solution: Solution,
    pub trials: Vec<(f64, GridTrial)>,
}

impl GridOutcome {
    pub fn converged(&self) -> bool {
        matches!(self.trials.iter().find(|(a, _)| *a == self.alpha), Some((_, GridTrial::Converged(_))))
    }
}

/// Runs every constant step of `grid` and keeps the one that reaches
/// `cfg.rel_tol` in the fewest iterations (ties go to the larger step). If
/// none does, the lowest final relative error wins.
///
/// Steps are tried from largest to smallest and each run is capped at the
/// best iteration count found so far, which cannot change the winner.
pub fn best_constant_step(
    obs: &SparseObservations,
    r: &RankVector,
    cfg: &SolverConfig,
    truth: Truth<'_>,
    grid: &[f64],
) -> Result<GridOutcome> {
    let mut order: Vec<f64> = grid.to_vec();
    order.sort_by(|a, b| b.total_cmp(a));
    let mut best: Option<(f64, Solution, usize)> = None;
    let mut fallback: Option<(f64, Solution, f64)> = None;
    let mut trials = Vec::with_capacity(order.len());
    for alpha in order {
        let mut run = cfg.clone();
        run.step = StepRule::Constant(alpha);
        if let Some((_, _, iters)) = &best {
            if *iters == 0 {
                trials.push((alpha, GridTrial::Skipped));
                continue;
            }
            run.max_iters = run.max_iters.min(iters - 1);
        }
        match solve(obs, r, &run, Some(truth)) {
            Ok(sol) => {
                let err = sol.log.final_rel_error().unwrap_or(f64::INFINITY);
                if err <= cfg.rel_tol {
                    let iters = sol.log.iterations;
                    trials.push((alpha, GridTrial::Converged(iters)));
                    best = Some((alpha, sol, iters));
                } else {
                    trials.push((alpha, GridTrial::Unconverged(err)));
                    if best.is_none() && fallback.as_ref().is_none_or(|(_, _, e)| err < *e) {
                        fallback = Some((alpha, sol, err));
                    }
                }
            }
            Err(e @ (Error::Divergence(_) | Error::NonFinite(_))) => trials.push((alpha, GridTrial::Failed(e.to_string()))),
            Err(e) => return Err(e),
        }
    }
    let (alpha, solution) = match (best, fallback) {
        (Some((a, s, _)), _) => (a, s),
        (None, Some((a, s, _))) => (a, s),
        (None, None) => return Err(Error::Divergence("every step of the grid failed".into())),
    };
    Ok(GridOutcome { alpha, solution, trials })
}
