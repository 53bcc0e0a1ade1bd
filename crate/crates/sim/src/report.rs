// SPDX-License-Identifier: Apache-2.0

use rawebs_core::Timestamp;
use serde::{Deserialize, Serialize};

use crate::scenario::{ScenarioName, ScenarioSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Detected,
    Prevented,
    UndetectedInWindow,
    NotApplicable,
}

/// One protocol message or action, stamped with simulated time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    /// Seconds since the start of the scenario.
    pub t: Timestamp,
    pub actor: String,
    pub action: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: ScenarioName,
    pub outcome: Outcome,
    /// Simulated seconds from the attack to its detection.
    pub detection_latency: Option<u64>,
    /// Simulated seconds during which users still saw the TA as valid.
    pub undetected_window: Option<u64>,
    /// `mmd + monitor_lag + poll_interval`.
    pub detection_bound: u64,
    pub notifications_delivered: u64,
    pub final_valid: Option<bool>,
    pub spec: ScenarioSpec,
    pub events: Vec<Event>,
}

impl ScenarioReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
