use std::fmt;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::str::FromStr;

use tt_complete::decomp::RetractionPath;
use tt_complete::metric::EpsilonRule;
use tt_complete::problems::{best_constant_step, SamplingMode, SparseObservations, STEP_GRID};
use tt_complete::solver::{solve, Algorithm, IterationLog, Solution, SolverConfig, StepRule, Trimming, Truth};
use tt_complete::tt_core::RankVector;

use crate::error::{CliError, CliResult};
use crate::settings::{format_list, parse_list, Settings};

/// `--step`: a fixed rule, or `grid` for the best constant step of a small grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepChoice {
    Rule(StepRule),
    Grid,
}

impl fmt::Display for StepChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepChoice::Rule(r) => r.fmt(f),
            StepChoice::Grid => f.write_str("grid"),
        }
    }
}

impl FromStr for StepChoice {
    type Err = tt_complete::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().eq_ignore_ascii_case("grid") {
            return Ok(StepChoice::Grid);
        }
        s.parse().map(StepChoice::Rule)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Retraction(pub RetractionPath);

impl fmt::Display for Retraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.0 {
            RetractionPath::Dense => "dense",
            RetractionPath::Structured => "structured",
        })
    }
}

impl FromStr for Retraction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dense" => Ok(Retraction(RetractionPath::Dense)),
            "structured" => Ok(Retraction(RetractionPath::Structured)),
            _ => Err(format!("unknown retraction {s:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sampling(pub SamplingMode);

impl fmt::Display for Sampling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.0 {
            SamplingMode::WithReplacement => "with_replacement",
            SamplingMode::WithoutReplacement => "without_replacement",
        })
    }
}

impl FromStr for Sampling {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "with_replacement" => Ok(Sampling(SamplingMode::WithReplacement)),
            "without_replacement" => Ok(Sampling(SamplingMode::WithoutReplacement)),
            _ => Err(format!("unknown sampling mode {s:?}")),
        }
    }
}

/// Command-specific defaults for the solver settings.
pub struct SolverDefaults {
    pub step: StepChoice,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub iterate_change_tol: f64,
}

pub struct SolverSetup {
    pub config: SolverConfig,
    pub step: StepChoice,
}

/// Reads the shared solver keys, recording defaults for the ones not given.
pub fn solver_setup(s: &mut Settings, d: SolverDefaults) -> CliResult<SolverSetup> {
    let base = SolverConfig::default();
    let step: StepChoice = s.value_or("step", d.step)?;
    let config = SolverConfig {
        algorithm: s.value_or::<Algorithm>("algo", base.algorithm)?,
        step: match step {
            StepChoice::Rule(r) => r,
            StepChoice::Grid => base.step,
        },
        max_iters: s.value_or("max_iters", d.max_iters)?,
        rel_tol: s.value_or("rel_tol", d.rel_tol)?,
        iterate_change_tol: s.value_or("iterate_change_tol", d.iterate_change_tol)?,
        trimming: s.value_or::<Trimming>("trimming", base.trimming)?,
        epsilon_rule: s.value_or::<EpsilonRule>("epsilon", base.epsilon_rule)?,
        seed: s.value_or("seed", 0u64)?,
        log_every: s.value_or("log_every", base.log_every)?,
        retraction: s.value_or("retraction", Retraction(base.retraction))?.0,
    };
    Ok(SolverSetup { config, step })
}

pub fn sampling(s: &mut Settings) -> CliResult<SamplingMode> {
    Ok(s.value_or("sampling", Sampling(SamplingMode::default()))?.0)
}

/// `--rank`: either the full list `r_1,…,r_{m−1}` or one value for every bond.
pub fn rank(s: &Settings, order: usize) -> CliResult<RankVector> {
    let raw = s.get("rank").ok_or_else(|| CliError::Usage("missing required setting --rank".into()))?;
    let list = parse_list(raw).map_err(|e| CliError::Usage(format!("rank: {e}")))?;
    let list = match list.as_slice() {
        [r] if order > 2 => vec![*r; order - 1],
        _ => list,
    };
    if list.len() + 1 != order {
        return Err(CliError::Usage(format!(
            "rank {} has {} entries, tensor of order {order} needs {}",
            format_list(&list),
            list.len(),
            order.saturating_sub(1)
        )));
    }
    Ok(RankVector::new(list)?)
}

pub fn positive_f64(s: &Settings, key: &str) -> CliResult<f64> {
    let v: f64 = s.required(key)?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(CliError::Usage(format!("{key} must be positive, got {v}")));
    }
    Ok(v)
}

/// Solves with the configured step; with [`StepChoice::Grid`] the step that
/// reaches `rel_tol` fastest is kept. Returns the solution and the step used.
pub fn run_solver(
    obs: &SparseObservations,
    r: &RankVector,
    setup: &SolverSetup,
    truth: Option<Truth<'_>>,
) -> CliResult<(Solution, StepRule)> {
    match setup.step {
        StepChoice::Rule(rule) => Ok((solve(obs, r, &setup.config, truth)?, rule)),
        StepChoice::Grid => {
            let truth = truth.ok_or_else(|| CliError::Usage("--step grid needs a known ground truth".into()))?;
            let out = best_constant_step(obs, r, &setup.config, truth, &STEP_GRID)?;
            Ok((out.solution, StepRule::Constant(out.alpha)))
        }
    }
}

pub fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn write_log(path: &Path, log: &IterationLog) -> CliResult<()> {
    let f = File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    log.write_csv(&mut BufWriter::new(f))?;
    Ok(())
}

pub fn read_log(path: &Path) -> CliResult<IterationLog> {
    let f = File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(IterationLog::read_csv(std::io::BufReader::new(f))?)
}

pub fn path_string(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_choice_parsing() {
        assert_eq!("grid".parse::<StepChoice>().unwrap(), StepChoice::Grid);
        assert_eq!("constant=2".parse::<StepChoice>().unwrap(), StepChoice::Rule(StepRule::Constant(2.0)));
        assert!("fastest".parse::<StepChoice>().is_err());
        let r = Retraction(RetractionPath::Dense);
        assert_eq!(r.to_string().parse::<Retraction>().unwrap(), r);
        let m = Sampling(SamplingMode::WithReplacement);
        assert_eq!(m.to_string().parse::<Sampling>().unwrap(), m);
    }

    #[test]
    fn rank_broadcast_and_mismatch() {
        let mut s = Settings::new();
        s.set("rank", "3");
        assert_eq!(rank(&s, 4).unwrap().as_slice(), &[3, 3, 3]);
        s.set("rank", "3,2");
        assert!(matches!(rank(&s, 4), Err(CliError::Usage(_))));
        assert_eq!(rank(&s, 3).unwrap().as_slice(), &[3, 2]);
    }

    #[test]
    fn defaults_are_recorded() {
        let mut s = Settings::new();
        s.set("algo", "rgd");
        let d = SolverDefaults { step: StepChoice::Grid, max_iters: 9, rel_tol: 1e-3, iterate_change_tol: 1e-9 };
        let setup = solver_setup(&mut s, d).unwrap();
        assert_eq!(setup.config.algorithm, Algorithm::Rgd);
        assert_eq!(setup.config.max_iters, 9);
        assert_eq!(s.get("step"), Some("grid"));
        assert_eq!(s.get("max_iters"), Some("9"));
        s.set("epsilon", "bogus");
        let d = SolverDefaults { step: StepChoice::Grid, max_iters: 9, rel_tol: 1e-3, iterate_change_tol: 1e-9 };
        assert!(matches!(solver_setup(&mut s, d), Err(CliError::Usage(_))));
    }
}
