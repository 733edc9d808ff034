//! Run manifests: a flat `key=value` record written next to every run.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::{CliError, CliResult};
use crate::settings::Settings;

pub const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Clone, Debug, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    /// Every effective setting, defaults included.
    pub config: Settings,
    pub seed: u64,
    pub build: String,
    pub threads: usize,
    pub start_unix_ms: u128,
    pub end_unix_ms: u128,
    /// Output role → path.
    pub outputs: BTreeMap<String, String>,
}

pub fn now_unix_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

pub fn build_id() -> String {
    format!(
        "{} {} ({})",
        env!("CARGO_PKG_NAME"),
        env!("CARGO_PKG_VERSION"),
        option_env!("TTC_BUILD_REV").unwrap_or("unversioned")
    )
}

impl RunManifest {
    pub fn to_text(&self) -> String {
        let mut out = String::from("# ttc run manifest\n");
        out += &format!("command={}\n", self.command);
        for (i, a) in self.argv.iter().enumerate() {
            out += &format!("argv.{i}={a}\n");
        }
        out += &format!("seed={}\n", self.seed);
        out += &format!("build={}\n", self.build);
        out += &format!("threads={}\n", self.threads);
        out += &format!("start_unix_ms={}\n", self.start_unix_ms);
        out += &format!("end_unix_ms={}\n", self.end_unix_ms);
        for (k, v) in self.config.iter() {
            out += &format!("config.{k}={v}\n");
        }
        for (k, v) in &self.outputs {
            out += &format!("output.{k}={v}\n");
        }
        out
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.to_text()).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let bad = |m: String| CliError::Io(format!("manifest: {m}"));
        let mut m = RunManifest {
            command: String::new(),
            argv: Vec::new(),
            config: Settings::new(),
            seed: 0,
            build: String::new(),
            threads: 1,
            start_unix_ms: 0,
            end_unix_ms: 0,
            outputs: BTreeMap::new(),
        };
        let mut argv: BTreeMap<usize, String> = BTreeMap::new();
        for line in text.lines() {
            let t = line.trim_end();
            if t.trim().is_empty() || t.starts_with('#') {
                continue;
            }
            let (k, v) = t.split_once('=').ok_or_else(|| bad(format!("expected key=value, got {t:?}")))?;
            let num = |v: &str| v.parse::<u128>().map_err(|_| bad(format!("bad number {v:?} for {k}")));
            if let Some(rest) = k.strip_prefix("config.") {
                m.config.set(rest, v);
            } else if let Some(rest) = k.strip_prefix("output.") {
                m.outputs.insert(rest.to_string(), v.to_string());
            } else if let Some(rest) = k.strip_prefix("argv.") {
                let i = rest.parse().map_err(|_| bad(format!("bad argv key {k:?}")))?;
                argv.insert(i, v.to_string());
            } else {
                match k {
                    "command" => m.command = v.to_string(),
                    "seed" => m.seed = num(v)? as u64,
                    "build" => m.build = v.to_string(),
                    "threads" => m.threads = num(v)? as usize,
                    "start_unix_ms" => m.start_unix_ms = num(v)?,
                    "end_unix_ms" => m.end_unix_ms = num(v)?,
                    _ => return Err(bad(format!("unknown key {k:?}"))),
                }
            }
        }
        if m.command.is_empty() {
            return Err(bad("missing command".into()));
        }
        m.argv = argv.into_values().collect();
        Ok(m)
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut config = Settings::new();
        config.set("dims", "30,30,30");
        config.set("step", "constant=2.0");
        let mut outputs = BTreeMap::new();
        outputs.insert("log.0".to_string(), "out/trial_000.csv".to_string());
        let m = RunManifest {
            command: "synth".into(),
            argv: vec!["ttc".into(), "synth".into(), "--dims".into(), "30,30,30".into()],
            config,
            seed: 42,
            build: build_id(),
            threads: 4,
            start_unix_ms: 1,
            end_unix_ms: 2,
            outputs,
        };
        assert_eq!(RunManifest::parse(&m.to_text()).unwrap(), m);
        assert!(RunManifest::parse("seed=1\n").is_err());
        assert!(RunManifest::parse("command=x\nwhat=1\n").is_err());
    }
}
