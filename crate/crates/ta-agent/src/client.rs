// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::time::Duration;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use rawebs_core::{Domain, Evidence, PublicKey};
use serde::{Deserialize, Serialize};

/// Body of `POST /api/ta`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegistrationRequest {
    pub repository: String,
    pub commit_id: String,
    pub domain: String,
    /// Base64 DER.
    pub public_key: String,
    /// Base64 evidence bytes.
    pub evidence: String,
}

impl RegistrationRequest {
    pub fn new(repository: &str, commit_id: &str, domain: &Domain, pk: &PublicKey, evidence: &Evidence) -> Self {
        Self {
            repository: repository.into(),
            commit_id: commit_id.into(),
            domain: domain.to_string(),
            public_key: STANDARD.encode(pk.der()),
            evidence: evidence.to_base64(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct RegistrationReceipt {
    pub id: i64,
    pub domain: String,
    pub rv: String,
}

/// A refusal from the Verifier, as reported in its error body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    pub status: u16,
    /// Machine-readable code such as `preexisting_certificate`.
    pub code: String,
    pub message: String,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({}): {}", self.code, self.status, self.message)
    }
}

/// The Verifier's TA registration endpoint.
pub trait VerifierApi: Send + Sync {
    fn register(&self, token: &str, req: &RegistrationRequest) -> Result<RegistrationReceipt, Rejection>;
}

pub struct HttpVerifier {
    base: String,
    agent: ureq::Agent,
}

impl HttpVerifier {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base: base_url.into().trim_end_matches('/').to_owned(),
            agent: ureq::AgentBuilder::new().timeout(Duration::from_secs(60)).build(),
        }
    }
}

#[derive(Deserialize)]
struct ErrorBody {
    error: String,
    message: String,
}

impl VerifierApi for HttpVerifier {
    fn register(&self, token: &str, req: &RegistrationRequest) -> Result<RegistrationReceipt, Rejection> {
        let body = serde_json::to_string(req).expect("request serializes");
        let result = self
            .agent
            .post(&format!("{}/api/ta", self.base))
            .set("Authorization", &format!("Bearer {token}"))
            .set("Content-Type", "application/json")
            .send_string(&body);
        match result {
            Ok(resp) => {
                let status = resp.status();
                resp.into_string()
                    .ok()
                    .and_then(|text| serde_json::from_str(&text).ok())
                    .ok_or(Rejection { status, code: "bad_response".into(), message: "unreadable receipt".into() })
            }
            Err(ureq::Error::Status(status, resp)) => {
                let text = resp.into_string().unwrap_or_default();
                Err(match serde_json::from_str::<ErrorBody>(&text) {
                    Ok(e) => Rejection { status, code: e.error, message: e.message },
                    Err(_) => Rejection { status, code: "http_error".into(), message: text },
                })
            }
            Err(e) => Err(Rejection { status: 0, code: "unreachable".into(), message: e.to_string() }),
        }
    }
}
