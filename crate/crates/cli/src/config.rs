use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::commands;
use crate::error::CliError;

/// Contents of the `--config` TOML file. Each subcommand has a table named
/// after it whose keys are the subcommand's long flag names in snake case.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    pub divide: Option<commands::divide::Args>,
    pub gen_questions: Option<commands::questions::Args>,
    pub score: Option<commands::score::Args>,
    pub popstats: Option<commands::popstats::Args>,
    pub shifttests: Option<commands::shift::Args>,
    pub hardmine: Option<commands::hardmine::Args>,
    pub report: Option<commands::report::Args>,
    pub synth: Option<commands::synth::Args>,
    pub simulate: Option<commands::synth::SimulateArgs>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

fn is_unset(v: &Value) -> bool {
    match v {
        Value::Null | Value::Bool(false) => true,
        Value::Array(a) => a.is_empty(),
        _ => false,
    }
}

/// Overlay the flags onto the config-file section: a flag wins unless it
/// was left unset (absent, empty list or a false switch).
pub fn layered<T>(flags: T, file: Option<&T>) -> Result<T, CliError>
where
    T: Serialize + DeserializeOwned,
{
    let Some(file) = file else {
        return Ok(flags);
    };
    let usage = |e: serde_json::Error| CliError::Usage(e.to_string());
    let mut base = serde_json::to_value(file).map_err(usage)?;
    let top = serde_json::to_value(flags).map_err(usage)?;
    if let (Value::Object(base), Value::Object(top)) = (&mut base, top) {
        for (k, v) in top {
            if !is_unset(&v) {
                base.insert(k, v);
            }
        }
    }
    serde_json::from_value(base).map_err(usage)
}
