// SPDX-License-Identifier: Apache-2.0

use rawebs_core::VerificationReason;
use thiserror::Error;

pub type Result<T, E = VerifierError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum VerifierError {
    #[error("unauthorized")]
    Unauthorized,

    #[error("building {origin} failed: {reason}")]
    BuildFailed { origin: String, reason: String },

    #[error("certificates already exist for the domain (log indices {log_indices:?})")]
    PreexistingCertificate { log_indices: Vec<u64> },

    #[error("evidence rejected: {0}")]
    EvidenceRejected(VerificationReason),

    #[error("not found")]
    NotFound,

    #[error("malformed subscription: {0}")]
    MalformedSubscription(&'static str),

    #[error("malformed request: {0}")]
    BadRequest(String),

    #[error("provision limit reached for this service")]
    RateLimited,

    #[error("CT monitor unavailable: {0}")]
    MonitorUnavailable(String),

    #[error("store: {0}")]
    Store(#[from] rusqlite::Error),
}

impl VerifierError {
    /// HTTP status the API answers with.
    pub fn http_status(&self) -> u16 {
        match self {
            Self::Unauthorized => 401,
            Self::PreexistingCertificate { .. } => 409,
            Self::EvidenceRejected(_) => 422,
            Self::NotFound => 404,
            Self::BuildFailed { .. } | Self::MalformedSubscription(_) | Self::BadRequest(_) => 400,
            Self::RateLimited => 429,
            Self::MonitorUnavailable(_) => 503,
            Self::Store(_) => 500,
        }
    }

    /// Stable machine-readable code used in API error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            Self::Unauthorized => "unauthorized",
            Self::BuildFailed { .. } => "build_failed",
            Self::PreexistingCertificate { .. } => "preexisting_certificate",
            Self::EvidenceRejected(_) => "evidence_rejected",
            Self::NotFound => "not_found",
            Self::MalformedSubscription(_) => "malformed_subscription",
            Self::BadRequest(_) => "bad_request",
            Self::RateLimited => "rate_limited",
            Self::MonitorUnavailable(_) => "monitor_unavailable",
            Self::Store(_) => "internal",
        }
    }
}
