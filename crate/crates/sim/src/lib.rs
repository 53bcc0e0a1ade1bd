// SPDX-License-Identifier: Apache-2.0

//! Wires a Verifier, CA, CT log, monitor, TA and adversary together on a
//! simulated clock and replays attacks against the protocol.

mod report;
mod scenario;
mod world;

use thiserror::Error;

pub use report::{Event, Outcome, ScenarioReport};
pub use scenario::{run_all, run_scenario, ScenarioName, ScenarioSpec};
pub use world::{InProcessVerifier, World, ADMIN_CREDENTIAL, EPOCH, TA_DOMAIN, TA_REPOSITORY};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("{scenario}: {assertion}")]
    ScenarioFailure { scenario: ScenarioName, assertion: String },

    #[error("invalid scenario spec: {0}")]
    InvalidSpec(String),

    #[error("{} scenario(s) failed: {}", .0.len(), .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Aggregate(Vec<SimError>),
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;
