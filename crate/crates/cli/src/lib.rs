//! Command-line front end for TT tensor completion: synthetic benchmarks,
//! quantum state tomography, completion of dense tensor files and exact
//! replay of earlier runs from their manifests.

pub mod commands;
pub mod error;
pub mod manifest;
pub mod settings;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use error::{CliError, CliResult};
pub use manifest::RunManifest;
pub use settings::Settings;

#[derive(Parser, Debug)]
#[command(name = "ttc", version, about = "Low-rank tensor train completion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Random TT instances of known rank, solved over several trials
    Synth(SynthArgs),
    /// Pauli-measurement tomography of a random MPS state
    Qst(QstArgs),
    /// Complete a dense tensor file from sampled or given entries
    Complete(CompleteArgs),
    /// Re-run a command from its manifest
    Replay(ReplayArgs),
}

/// Solver flags shared by every solving command. All are optional and win
/// over values from `--config`.
#[derive(Args, Debug)]
struct SolverFlags {
    /// rgd or prgd
    #[arg(long)]
    algo: Option<String>,
    /// adaptive, theory, constant=ALPHA or grid
    #[arg(long)]
    step: Option<String>,
    #[arg(long)]
    max_iters: Option<String>,
    /// Target relative error against the known truth
    #[arg(long)]
    rel_tol: Option<String>,
    #[arg(long)]
    iterate_change_tol: Option<String>,
    /// vee2, floored=F, scaled=C or fixed=E
    #[arg(long)]
    epsilon: Option<String>,
    /// off or on=NU
    #[arg(long)]
    trimming: Option<String>,
    #[arg(long)]
    log_every: Option<String>,
    /// structured or dense
    #[arg(long)]
    retraction: Option<String>,
    /// with_replacement or without_replacement
    #[arg(long)]
    sampling: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// key=value file merged under the flags
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Mode sizes, e.g. 30,30,30
    #[arg(long)]
    dims: Option<String>,
    /// TT rank r_1,...,r_{m-1}, or a single value for all bonds
    #[arg(long)]
    rank: Option<String>,
    /// Oversampling: samples per manifold dimension
    #[arg(long)]
    os: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    noise_sigma: Option<String>,
    #[arg(long)]
    out_dir: Option<String>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args, Debug)]
struct QstArgs {
    #[arg(long)]
    qubits: Option<String>,
    /// MPS bond dimension of the true state
    #[arg(long)]
    bond: Option<String>,
    #[arg(long)]
    os: Option<String>,
    #[arg(long)]
    out_dir: Option<String>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args, Debug)]
struct CompleteArgs {
    /// Dense tensor file (TTDT)
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    rank: Option<String>,
    #[arg(long)]
    os: Option<String>,
    /// Observation file: lines of 1-based indices followed by the value
    #[arg(long)]
    mask: Option<String>,
    /// Recovered dense tensor file; report, log and manifest are written next to it
    #[arg(long)]
    out: Option<String>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory (synth, qst) or file (complete) for the re-run
    #[arg(long, alias = "out")]
    out_dir: Option<String>,
    /// Fail unless the new logs match the recorded ones bit for bit
    #[arg(long)]
    verify: bool,
}

impl SolverFlags {
    fn settings(self) -> CliResult<Settings> {
        let mut s = match &self.config {
            Some(p) => Settings::load(p)?,
            None => Settings::new(),
        };
        s.overlay("algo", self.algo);
        s.overlay("step", self.step);
        s.overlay("max_iters", self.max_iters);
        s.overlay("rel_tol", self.rel_tol);
        s.overlay("iterate_change_tol", self.iterate_change_tol);
        s.overlay("epsilon", self.epsilon);
        s.overlay("trimming", self.trimming);
        s.overlay("log_every", self.log_every);
        s.overlay("retraction", self.retraction);
        s.overlay("sampling", self.sampling);
        s.overlay("seed", self.seed);
        Ok(s)
    }
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code: 0 success, 1 solver failure, 2 usage or I/O error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let argv: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(cli.command, argv) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("ttc: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: Command, argv: Vec<String>) -> CliResult<RunManifest> {
    match command {
        Command::Synth(a) => {
            let mut s = a.solver.settings()?;
            s.overlay("dims", a.dims);
            s.overlay("rank", a.rank);
            s.overlay("os", a.os);
            s.overlay("trials", a.trials);
            s.overlay("noise_sigma", a.noise_sigma);
            s.overlay("out_dir", a.out_dir);
            commands::synth::run(s, argv)
        }
        Command::Qst(a) => {
            let mut s = a.solver.settings()?;
            s.overlay("qubits", a.qubits);
            s.overlay("bond", a.bond);
            s.overlay("os", a.os);
            s.overlay("out_dir", a.out_dir);
            commands::qst::run(s, argv)
        }
        Command::Complete(a) => {
            let mut s = a.solver.settings()?;
            s.overlay("input", a.input);
            s.overlay("rank", a.rank);
            s.overlay("os", a.os);
            s.overlay("mask", a.mask);
            s.overlay("out", a.out);
            commands::complete::run(s, argv)
        }
        Command::Replay(a) => commands::replay::run(
            commands::replay::ReplayOptions { manifest: &a.manifest, output: a.out_dir, verify: a.verify },
            argv,
        ),
    }
}
