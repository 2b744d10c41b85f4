// Copyright 2026 The qdiv Authors
// SPDX-License-Identifier: Apache-2.0

//! Scenario ingestion, the analysis pipeline and result files behind the
//! `qdiv` binary.

#![forbid(unsafe_code)]

pub mod emit;
pub mod error;
pub mod run;
pub mod scenario;

pub use emit::emit;
pub use error::{CliError, ScenarioError, ScenarioErrors};
pub use run::{run, simulate, RunRecord};
pub use scenario::{parse_scenario, print_scenario, Analysis, Scenario};
