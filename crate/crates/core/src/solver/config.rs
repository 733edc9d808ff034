use std::fmt;
use std::str::FromStr;

use crate::decomp::{RetractionPath, DENSE_RETRACTION_LIMIT};
use crate::error::{ensure, Error, Result};
use crate::metric::EpsilonRule;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Algorithm {
    Rgd,
    #[default]
    Prgd,
}

/// Step-size strategy.
///
/// `Constant(α)` takes the step `α·ε^{1/2}`, where `ε` is the current metric
/// shift (1 for RGD, so the step is `α` itself). `Theory` takes
/// `1.001·ε^{1/2}/p` with `p = |Ω|/d*`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepRule {
    Adaptive,
    Constant(f64),
    Theory,
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule::Constant(1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum Trimming {
    #[default]
    Off,
    /// Spikiness parameter `ν`.
    On(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub step: StepRule,
    pub max_iters: usize,
    /// Stop once the relative error against a known truth drops to this level.
    pub rel_tol: f64,
    /// Stop once `‖T_{l+1} − T_l‖_F ≤ tol · max(1, ‖T_l‖_F)`.
    pub iterate_change_tol: f64,
    pub trimming: Trimming,
    pub epsilon_rule: EpsilonRule,
    pub seed: u64,
    /// Record every `log_every`-th iteration (the first and last are always kept).
    pub log_every: usize,
    pub retraction: RetractionPath,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::default(),
            step: StepRule::default(),
            max_iters: 500,
            rel_tol: 1e-4,
            iterate_change_tol: 1e-5,
            trimming: Trimming::Off,
            epsilon_rule: EpsilonRule::default(),
            seed: 0,
            log_every: 1,
            retraction: RetractionPath::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self, num_entries: usize) -> Result<()> {
        if let StepRule::Constant(a) = self.step {
            ensure!(a > 0.0 && a.is_finite(), Domain, "constant step must be positive, got {a}");
        }
        if let Trimming::On(nu) = self.trimming {
            ensure!(nu > 0.0 && nu.is_finite(), Domain, "spikiness parameter must be positive, got {nu}");
            ensure!(
                num_entries <= DENSE_RETRACTION_LIMIT,
                Capacity,
                "trimming needs a dense candidate; {num_entries} entries exceed {DENSE_RETRACTION_LIMIT}"
            );
        }
        ensure!(self.rel_tol > 0.0, Domain, "rel_tol must be positive");
        ensure!(self.iterate_change_tol > 0.0, Domain, "iterate_change_tol must be positive");
        ensure!(self.log_every >= 1, Domain, "log_every must be at least 1");
        match self.epsilon_rule {
            EpsilonRule::Fixed(e) => ensure!(e > 0.0, Domain, "fixed epsilon must be positive"),
            EpsilonRule::FlooredVeeSquared(f) => ensure!(f > 0.0, Domain, "epsilon floor must be positive"),
            EpsilonRule::ScaledVeeSquared(c) => ensure!(c > 0.0, Domain, "epsilon scale must be positive"),
            EpsilonRule::VeeSquared => {}
        }
        Ok(())
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Rgd => "rgd",
            Algorithm::Prgd => "prgd",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rgd" => Ok(Algorithm::Rgd),
            "prgd" => Ok(Algorithm::Prgd),
            _ => Err(Error::Format(format!("unknown algorithm {s:?}"))),
        }
    }
}

impl fmt::Display for StepRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepRule::Adaptive => f.write_str("adaptive"),
            StepRule::Theory => f.write_str("theory"),
            StepRule::Constant(a) => write!(f, "constant={a:?}"),
        }
    }
}

impl FromStr for StepRule {
    type Err = Error;

    /// Accepts `adaptive`, `theory`, `constant` (α = 1) and `constant=α`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "adaptive" => return Ok(StepRule::Adaptive),
            "theory" => return Ok(StepRule::Theory),
            "constant" => return Ok(StepRule::Constant(1.0)),
            _ => {}
        }
        let a = s
            .strip_prefix("constant=")
            .and_then(|v| v.parse::<f64>().ok())
            .ok_or_else(|| Error::Format(format!("unknown step rule {s:?}")))?;
        Ok(StepRule::Constant(a))
    }
}

impl fmt::Display for Trimming {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Trimming::Off => f.write_str("off"),
            Trimming::On(nu) => write!(f, "on={nu:?}"),
        }
    }
}

impl FromStr for Trimming {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "off" {
            return Ok(Trimming::Off);
        }
        s.strip_prefix("on=")
            .and_then(|v| v.parse::<f64>().ok())
            .map(Trimming::On)
            .ok_or_else(|| Error::Format(format!("unknown trimming setting {s:?}")))
    }
}
