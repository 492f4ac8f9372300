use std::path::{Path, PathBuf};

use oodkit_core::corpus::LabelSpace;
use oodkit_core::rng::keyed_rng;
use rand::Rng;

use crate::error::CliError;

pub mod divide;
pub mod hardmine;
pub mod popstats;
pub mod questions;
pub mod report;
pub mod score;
pub mod shift;
pub mod synth;
pub mod validate;

pub(crate) fn require<T>(value: Option<T>, flag: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Usage(format!("missing required setting --{flag}")))
}

pub(crate) fn require_files(paths: &[PathBuf], flag: &str) -> Result<(), CliError> {
    if paths.is_empty() {
        return Err(CliError::Usage(format!("missing required setting --{flag}")));
    }
    Ok(())
}

/// Load a label space and apply its remap table.
pub(crate) fn load_space(path: &Path) -> Result<LabelSpace, CliError> {
    LabelSpace::load(path)
        .and_then(|s| s.apply_remap())
        .map_err(CliError::input(path))
}

/// Independent seed for one stage of a command.
pub(crate) fn stage_seed(seed: u64, stage: &str) -> u64 {
    keyed_rng(seed, stage).random()
}
