use std::path::PathBuf;

use oodkit_core::corpus::CorpusError;
use oodkit_core::division::DivisionError;
use oodkit_core::hardmine::HardMineError;
use oodkit_core::popstats::PopStatsError;
use oodkit_core::questiongen::QuestionError;
use oodkit_core::scoring::ScoringError;
use oodkit_core::shifttests::ShiftError;
use thiserror::Error;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_DATA: i32 = 5;
pub const EXIT_ANALYSIS: i32 = 6;
pub const EXIT_LINT: i32 = 7;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}", input_message(path, source))]
    Input {
        path: PathBuf,
        #[source]
        source: CorpusError,
    },
    #[error("{path}: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error(transparent)]
    Division(#[from] DivisionError),
    #[error(transparent)]
    Question(#[from] QuestionError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    PopStats(#[from] PopStatsError),
    #[error(transparent)]
    Shift(#[from] ShiftError),
    #[error(transparent)]
    HardMine(#[from] HardMineError),
    #[error("{0} excluded label reference(s) found")]
    LintFindings(usize),
}

fn input_message(path: &std::path::Path, source: &CorpusError) -> String {
    match source {
        CorpusError::Io { .. } => source.to_string(),
        _ => format!("{}: {source}", path.display()),
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Config { .. } => EXIT_CONFIG,
            CliError::Io { .. } => EXIT_IO,
            CliError::Input { source, .. } if !source.is_record_error() => EXIT_IO,
            CliError::Input { .. } | CliError::Malformed { .. } => EXIT_DATA,
            CliError::LintFindings(_) => EXIT_LINT,
            _ => EXIT_ANALYSIS,
        }
    }

    pub fn input(path: impl Into<PathBuf>) -> impl FnOnce(CorpusError) -> CliError {
        let path = path.into();
        move |source| CliError::Input { path, source }
    }
}
