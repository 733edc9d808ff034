//! `ttc complete`: completes a dense tensor from a sample of its entries.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use tt_complete::problems::{os_to_n, psnr, sample_uniform, SparseObservations};
use tt_complete::solver::{StepRule, Truth};
use tt_complete::tt_core::io::{load_dense, save_dense};

use super::common::{self, SolverDefaults, StepChoice};
use crate::error::{CliError, CliResult};
use crate::manifest::{build_id, now_unix_ms, RunManifest};
use crate::settings::Settings;

/// `<out><suffix>`, e.g. `recovered.ttd.log.csv`.
pub fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

pub const LOG_SUFFIX: &str = ".log.csv";
pub const REPORT_SUFFIX: &str = ".report.txt";
pub const MANIFEST_SUFFIX: &str = ".manifest.txt";

pub fn run(mut s: Settings, argv: Vec<String>) -> CliResult<RunManifest> {
    let start = now_unix_ms();
    let input = PathBuf::from(s.required::<String>("input")?);
    let out = PathBuf::from(s.required::<String>("out")?);
    let x = load_dense(&input).map_err(|e| CliError::Io(format!("{}: {e}", input.display())))?;
    let dims = x.dims().to_vec();
    let r = common::rank(&s, dims.len())?;
    r.check_feasible(&dims)?;
    let setup = common::solver_setup(
        &mut s,
        SolverDefaults { step: StepChoice::Rule(StepRule::Adaptive), max_iters: 500, rel_tol: 1e-4, iterate_change_tol: 1e-10 },
    )?;
    setup.config.validate(x.len())?;
    let obs = match (s.get("os"), s.get("mask")) {
        (Some(_), Some(_)) => return Err(CliError::Usage("--os and --mask are mutually exclusive".into())),
        (None, None) => return Err(CliError::Usage("one of --os or --mask is required".into())),
        (Some(_), None) => {
            let os = common::positive_f64(&s, "os")?;
            let mode = common::sampling(&mut s)?;
            let n = os_to_n(&dims, &r, os)?;
            sample_uniform(&x, n, setup.config.seed, mode)?
        }
        (None, Some(mask)) => {
            let mask = PathBuf::from(mask);
            let f = File::open(&mask).map_err(|e| CliError::Io(format!("{}: {e}", mask.display())))?;
            SparseObservations::read_text(BufReader::new(f), dims.clone())
                .map_err(|e| CliError::Io(format!("{}: {e}", mask.display())))?
        }
    };
    let (sol, step) = common::run_solver(&obs, &r, &setup, Some(Truth::Dense(&x)))?;
    let recovered = sol.tensor.to_dense()?;
    let rel_error = recovered.sub(&x)?.fro_norm() / x.fro_norm();
    let peak_snr = psnr(&recovered, &x)?;

    save_dense(&out, &recovered).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let log_path = sibling(&out, LOG_SUFFIX);
    common::write_log(&log_path, &sol.log)?;
    let mut report = String::new();
    report += &format!("samples={}\n", obs.len());
    report += &format!("sampling_fraction={:?}\n", obs.sampling_fraction());
    report += &format!("step={step}\n");
    report += &format!("iterations={}\n", sol.log.iterations);
    report += &format!(
        "stop_reason={}\n",
        sol.log.stop_reason.map(|r| r.to_string()).unwrap_or_default()
    );
    report += &format!("rel_error={rel_error:?}\n");
    report += &format!("psnr_db={peak_snr:?}\n");
    let report_path = sibling(&out, REPORT_SUFFIX);
    common::write_text(&report_path, &report)?;

    let mut outputs = std::collections::BTreeMap::new();
    outputs.insert("tensor".to_string(), common::path_string(&out));
    outputs.insert("log".to_string(), common::path_string(&log_path));
    outputs.insert("report".to_string(), common::path_string(&report_path));
    let manifest = RunManifest {
        command: "complete".into(),
        argv,
        seed: setup.config.seed,
        config: s,
        build: build_id(),
        threads: rayon::current_num_threads(),
        start_unix_ms: start,
        end_unix_ms: now_unix_ms(),
        outputs,
    };
    manifest.write(&sibling(&out, MANIFEST_SUFFIX))?;
    print!("{report}");
    Ok(manifest)
}
