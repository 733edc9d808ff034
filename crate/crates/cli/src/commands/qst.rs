//! `ttc qst`: Pauli-measurement state tomography of a random low-bond MPS state.

use std::path::PathBuf;

use tt_complete::problems::{fidelity_diag, os_to_n, pauli_tt, qst_random_mpo, reconstruct_density, sample_uniform, Mpo};
use tt_complete::solver::{StepRule, Truth};

use super::common::{self, SolverDefaults, StepChoice};
use crate::error::{CliError, CliResult};
use crate::manifest::{build_id, now_unix_ms, RunManifest, MANIFEST_FILE};
use crate::settings::Settings;

pub const LOG_FILE: &str = "log.csv";
pub const REPORT_FILE: &str = "report.txt";
/// Largest register for which the Hermiticity check builds the dense matrix.
const HERMITICITY_QUBIT_LIMIT: usize = 10;

pub fn run(mut s: Settings, argv: Vec<String>) -> CliResult<RunManifest> {
    let start = now_unix_ms();
    let qubits: usize = s.required("qubits")?;
    let bond: usize = s.required("bond")?;
    let os = common::positive_f64(&s, "os")?;
    let mode = common::sampling(&mut s)?;
    let out_dir = PathBuf::from(s.value_or("out_dir", "ttc_qst".to_string())?);
    let setup = common::solver_setup(
        &mut s,
        SolverDefaults { step: StepChoice::Rule(StepRule::Adaptive), max_iters: 1000, rel_tol: 1e-10, iterate_change_tol: 1e-12 },
    )?;
    let seed = setup.config.seed;
    let rho = qst_random_mpo(qubits, bond, seed)?;
    let truth = pauli_tt(&rho)?;
    let dims = truth.dims();
    let r = truth.ranks();
    setup.config.validate(truth.num_entries())?;
    let n = os_to_n(&dims, &r, os)?;
    let obs = sample_uniform(&truth, n, seed.wrapping_add(1), mode)?;
    let (sol, step) = common::run_solver(&obs, &r, &setup, Some(Truth::Tt(&truth)))?;
    let rec = reconstruct_density(&sol.tensor)?;
    let rel_error = sol.log.final_rel_error().unwrap_or(f64::NAN);
    let fidelity = fidelity_diag(&rho, &rec)?;
    let trace = rec.trace();
    let herm = hermiticity_error(&rec)?;

    common::create_dir(&out_dir)?;
    let log_path = out_dir.join(LOG_FILE);
    common::write_log(&log_path, &sol.log)?;
    let mut report = String::new();
    report += &format!("qubits={qubits}\n");
    report += &format!("bond={bond}\n");
    report += &format!("tt_rank={r}\n");
    report += &format!("samples={n}\n");
    report += &format!("sampling_fraction={:?}\n", obs.sampling_fraction());
    report += &format!("step={step}\n");
    report += &format!("iterations={}\n", sol.log.iterations);
    report += &format!(
        "stop_reason={}\n",
        sol.log.stop_reason.map(|r| r.to_string()).unwrap_or_default()
    );
    report += &format!("rel_error={rel_error:?}\n");
    report += &format!("fidelity={fidelity:?}\n");
    report += &format!("trace_re={:?}\n", trace.re);
    report += &format!("trace_im={:?}\n", trace.im);
    if let Some(h) = herm {
        report += &format!("hermiticity_error={h:?}\n");
    }
    let report_path = out_dir.join(REPORT_FILE);
    common::write_text(&report_path, &report)?;

    let mut outputs = std::collections::BTreeMap::new();
    outputs.insert("log".to_string(), common::path_string(&log_path));
    outputs.insert("report".to_string(), common::path_string(&report_path));
    let manifest = RunManifest {
        command: "qst".into(),
        argv,
        config: s,
        seed,
        build: build_id(),
        threads: rayon::current_num_threads(),
        start_unix_ms: start,
        end_unix_ms: now_unix_ms(),
        outputs,
    };
    manifest.write(&out_dir.join(MANIFEST_FILE))?;
    print!("{report}");
    Ok(manifest)
}

/// `max |ρ − ρ†|` entrywise, for registers small enough to densify.
fn hermiticity_error(rho: &Mpo) -> CliResult<Option<f64>> {
    if rho.n_qubits() > HERMITICITY_QUBIT_LIMIT {
        return Ok(None);
    }
    let d = rho.to_dense().map_err(CliError::from)?;
    let diff = &d - d.adjoint();
    Ok(Some(diff.iter().map(|z| z.norm()).fold(0.0, f64::max)))
}
