// Copyright 2026 The qdiv Authors
// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// One problem in a scenario file. Lines are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("line {line}: unknown key or name `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("line {line}: bad value for `{key}`: {reason}")]
    BadValue { line: usize, key: String, reason: String },

    /// `line` points at the declaration that made the key required.
    #[error("line {line}: missing required key `{key}`")]
    MissingRequired { line: usize, key: String },
}

impl ScenarioError {
    pub fn line(&self) -> usize {
        match self {
            ScenarioError::UnknownKey { line, .. }
            | ScenarioError::BadValue { line, .. }
            | ScenarioError::MissingRequired { line, .. } => *line,
        }
    }
}

/// Every error found in one pass over a scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioErrors(pub Vec<ScenarioError>);

impl fmt::Display for ScenarioErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ScenarioErrors {}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid scenario:\n{0}")]
    Scenario(#[from] ScenarioErrors),

    #[error("invalid setting: {0}")]
    Setting(String),

    #[error("{stage} failed for model `{model}`: {source}")]
    Analysis {
        stage: &'static str,
        model: &'static str,
        #[source]
        source: qdiv_core::Error,
    },

    #[error("cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for bad input, 3 for analysis failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Scenario(_) | CliError::Setting(_) => 2,
            CliError::Analysis { .. } => 3,
            CliError::Io { .. } => 1,
        }
    }
}
