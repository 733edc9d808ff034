//! `ttc synth`: random low-rank TT instances, solved over several trials.

use std::path::PathBuf;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use tt_complete::problems::{add_noise, gen_synthetic_tt, os_to_n, sample_uniform};
use tt_complete::solver::{IterationLog, StepRule, Truth};
use tt_complete::tt_core::check_dims;

use super::common::{self, SolverDefaults, StepChoice};
use crate::error::{CliError, CliResult};
use crate::manifest::{build_id, now_unix_ms, RunManifest, MANIFEST_FILE};
use crate::settings::{format_list, Settings};

pub const SUMMARY_FILE: &str = "summary.csv";
pub const SUMMARY_HEADER: &str = "trial,seed,step,iterations,elapsed_ms,final_rel_error,stop_reason,status";

pub fn trial_file(k: usize) -> String {
    format!("trial_{k:03}.csv")
}

struct TrialOutcome {
    seed: u64,
    step: Option<StepRule>,
    result: Result<IterationLog, CliError>,
}

pub fn run(mut s: Settings, argv: Vec<String>) -> CliResult<RunManifest> {
    let start = now_unix_ms();
    let dims = s.required_list("dims")?;
    check_dims(&dims)?;
    let r = common::rank(&s, dims.len())?;
    r.check_feasible(&dims)?;
    let os = common::positive_f64(&s, "os")?;
    let trials: usize = s.value_or("trials", 1usize)?;
    if trials == 0 {
        return Err(CliError::Usage("trials must be at least 1".into()));
    }
    let sigma: f64 = s.value_or("noise_sigma", 0.0f64)?;
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(CliError::Usage(format!("noise_sigma must be non-negative, got {sigma}")));
    }
    let mode = common::sampling(&mut s)?;
    let out_dir = PathBuf::from(s.value_or("out_dir", "ttc_synth".to_string())?);
    let setup = common::solver_setup(
        &mut s,
        SolverDefaults { step: StepChoice::Rule(StepRule::Adaptive), max_iters: 500, rel_tol: 1e-4, iterate_change_tol: 1e-10 },
    )?;
    setup.config.validate(dims.iter().product())?;
    let n = os_to_n(&dims, &r, os)?;

    let mut rng = ChaCha8Rng::seed_from_u64(setup.config.seed);
    let seeds: Vec<u64> = (0..trials).map(|_| rng.next_u64()).collect();
    let outcomes: Vec<TrialOutcome> = seeds
        .par_iter()
        .map(|&ts| {
            let attempt = || -> CliResult<(IterationLog, StepRule)> {
                let truth = gen_synthetic_tt(&dims, &r, ts)?;
                let mut obs = sample_uniform(&truth, n, ts.wrapping_add(1), mode)?;
                if sigma > 0.0 {
                    obs = add_noise(&truth, &obs, sigma, ts.wrapping_add(2))?.obs;
                }
                let mut trial_setup = common::SolverSetup { config: setup.config.clone(), step: setup.step };
                trial_setup.config.seed = ts;
                let (sol, step) = common::run_solver(&obs, &r, &trial_setup, Some(Truth::Tt(&truth)))?;
                Ok((sol.log, step))
            };
            match attempt() {
                Ok((log, step)) => TrialOutcome { seed: ts, step: Some(step), result: Ok(log) },
                Err(e) => TrialOutcome { seed: ts, step: None, result: Err(e) },
            }
        })
        .collect();

    common::create_dir(&out_dir)?;
    let mut manifest = RunManifest {
        command: "synth".into(),
        argv,
        config: s,
        seed: setup.config.seed,
        build: build_id(),
        threads: rayon::current_num_threads(),
        start_unix_ms: start,
        end_unix_ms: 0,
        outputs: Default::default(),
    };
    let mut summary = String::from(SUMMARY_HEADER);
    summary.push('\n');
    let mut stats = Vec::new();
    let mut failures = Vec::new();
    for (k, o) in outcomes.iter().enumerate() {
        let trial = k + 1;
        let step = o.step.map(|s| s.to_string()).unwrap_or_default();
        match &o.result {
            Ok(log) => {
                let path = out_dir.join(trial_file(trial));
                common::write_log(&path, log)?;
                manifest.outputs.insert(format!("log.{trial:03}"), common::path_string(&path));
                let last = log.last().ok_or_else(|| CliError::Solver("empty iteration log".into()))?;
                let err = last.rel_error.unwrap_or(f64::NAN);
                let stop = log.stop_reason.map(|r| r.to_string()).unwrap_or_default();
                summary += &format!("{trial},{},{step},{},{:?},{err:?},{stop},ok\n", o.seed, last.iter, last.elapsed_ms);
                stats.push([last.iter as f64, last.elapsed_ms, err]);
            }
            Err(e) => {
                log::error!("trial {trial} failed: {e}");
                summary += &format!("{trial},{},{step},,,,,failed\n", o.seed);
                failures.push(format!("trial {trial}: {e}"));
            }
        }
    }
    if !stats.is_empty() {
        let [it, el, err] = column_stats(&stats, median);
        summary += &format!("median,,,{it:?},{el:?},{err:?},,\n");
        let [it, el, err] = column_stats(&stats, mean);
        summary += &format!("mean,,,{it:?},{el:?},{err:?},,\n");
    }
    let summary_path = out_dir.join(SUMMARY_FILE);
    common::write_text(&summary_path, &summary)?;
    manifest.outputs.insert("summary".into(), common::path_string(&summary_path));
    manifest.end_unix_ms = now_unix_ms();
    manifest.write(&out_dir.join(MANIFEST_FILE))?;
    println!("synth: {} trials of {} with rank {}, {n} samples, results in {}", trials, format_list(&dims), r, out_dir.display());
    print!("{summary}");
    if !failures.is_empty() {
        return Err(CliError::Solver(failures.join("; ")));
    }
    Ok(manifest)
}

fn column_stats(rows: &[[f64; 3]], f: fn(&mut [f64]) -> f64) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (c, o) in out.iter_mut().enumerate() {
        let mut col: Vec<f64> = rows.iter().map(|r| r[c]).collect();
        *o = f(&mut col);
    }
    out
}

/// Median (mean of the middle pair for even counts).
pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Mean, summed in the given order.
pub fn mean(v: &mut [f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_statistics() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(mean(&mut [1.0, 2.0, 6.0]), 3.0);
        assert_eq!(trial_file(7), "trial_007.csv");
    }
}
