pub mod common;
pub mod complete;
pub mod qst;
pub mod replay;
pub mod synth;

use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;
use crate::settings::Settings;

/// Runs `command` with fully merged settings.
pub fn dispatch(command: &str, settings: Settings, argv: Vec<String>) -> CliResult<RunManifest> {
    match command {
        "synth" => synth::run(settings, argv),
        "qst" => qst::run(settings, argv),
        "complete" => complete::run(settings, argv),
        other => Err(CliError::Usage(format!("unknown command {other:?}"))),
    }
}
