//! `ttc replay`: re-runs a command from its manifest and optionally checks the logs.

use std::collections::BTreeMap;
use std::path::Path;

use tt_complete::solver::IterationLog;

use super::common;
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;

pub struct ReplayOptions<'a> {
    pub manifest: &'a Path,
    /// Replaces the recorded `out_dir` (synth, qst) or `out` (complete).
    pub output: Option<String>,
    pub verify: bool,
}

pub fn run(opts: ReplayOptions<'_>, argv: Vec<String>) -> CliResult<RunManifest> {
    let old = RunManifest::read(opts.manifest)?;
    let original: BTreeMap<String, IterationLog> = if opts.verify {
        old.outputs
            .iter()
            .filter(|(k, _)| k.starts_with("log"))
            .map(|(k, p)| common::read_log(Path::new(p)).map(|l| (k.clone(), l)))
            .collect::<CliResult<_>>()?
    } else {
        BTreeMap::new()
    };
    let mut config = old.config.clone();
    let key = match old.command.as_str() {
        "synth" | "qst" => "out_dir",
        "complete" => "out",
        other => return Err(CliError::Usage(format!("manifest records unknown command {other:?}"))),
    };
    config.overlay(key, opts.output);
    let new = super::dispatch(&old.command, config, argv)?;
    if !opts.verify {
        return Ok(new);
    }
    if original.is_empty() {
        return Err(CliError::Usage("manifest lists no logs to verify".into()));
    }
    let mut mismatched = Vec::new();
    for (k, log) in &original {
        let replayed = new
            .outputs
            .get(k)
            .ok_or_else(|| CliError::Solver(format!("replay produced no {k}")))
            .and_then(|p| common::read_log(Path::new(p)))?;
        if !log.same_trajectory(&replayed) {
            mismatched.push(k.clone());
        }
    }
    if !mismatched.is_empty() {
        return Err(CliError::Solver(format!("replayed logs differ: {}", mismatched.join(", "))));
    }
    println!("replay: {} log(s) reproduced bit-exactly", original.len());
    Ok(new)
}
