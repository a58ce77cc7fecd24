//! Process exit codes, one per failing stage.

use std::fmt;

use crate::config::ConfigError;
use crate::ingest::IngestError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Usage,
    Config,
    Ingest,
    OptionMath,
    Pressure,
    Regress,
    Output,
    Synth,
}

impl Stage {
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Usage => 2,
            Stage::Config => 3,
            Stage::Ingest => 4,
            Stage::OptionMath => 5,
            Stage::Pressure => 6,
            Stage::Regress => 7,
            Stage::Output => 8,
            Stage::Synth => 9,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub stage: Stage,
    pub message: String,
}

impl CliError {
    pub fn new(stage: Stage, message: impl Into<String>) -> Self {
        CliError { stage, message: message.into() }
    }

    pub fn output(err: impl fmt::Display) -> Self {
        CliError::new(Stage::Output, err.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let stage = match self.stage {
            Stage::Usage => "usage",
            Stage::Config => "config",
            Stage::Ingest => "ingest",
            Stage::OptionMath => "option math",
            Stage::Pressure => "pressure",
            Stage::Regress => "regression",
            Stage::Output => "output",
            Stage::Synth => "simulation",
        };
        write!(f, "{stage} error: {}", self.message)
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::new(Stage::Config, e.to_string())
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::new(Stage::Ingest, e.to_string())
    }
}
