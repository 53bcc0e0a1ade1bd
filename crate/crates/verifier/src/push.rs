// SPDX-License-Identifier: Apache-2.0

//! Push notifications: signed JSON payloads POSTed to subscription endpoints.
//!
//! Messages are signed with the Verifier's P-256 application server key
//! instead of being encrypted per subscription. A receiver checks the
//! signature against the key from `GET /api/config/subscription`.

use std::sync::Mutex;
use std::time::Duration;

use base64::engine::general_purpose::URL_SAFE_NO_PAD as B64URL;
use base64::Engine;
use p256::ecdsa::signature::{Signer, Verifier as _};
use p256::ecdsa::{Signature, SigningKey, VerifyingKey};
use rand::rngs::OsRng;
use serde::{Deserialize, Serialize};

use crate::store::Subscription;

/// The Verifier's push signing key pair.
#[derive(Clone)]
pub struct PushKeys {
    signing: SigningKey,
}

impl PushKeys {
    pub fn generate() -> Self {
        Self { signing: SigningKey::random(&mut OsRng) }
    }

    pub fn from_secret_bytes(bytes: &[u8]) -> Result<Self, String> {
        SigningKey::from_slice(bytes)
            .map(|signing| Self { signing })
            .map_err(|e| format!("invalid push secret key: {e}"))
    }

    /// Reads a base64url-encoded 32-byte secret scalar.
    pub fn from_base64(text: &str) -> Result<Self, String> {
        let bytes = B64URL
            .decode(text.trim().trim_end_matches('='))
            .map_err(|e| format!("invalid push secret key: {e}"))?;
        Self::from_secret_bytes(&bytes)
    }

    pub fn secret_base64(&self) -> String {
        B64URL.encode(self.signing.to_bytes())
    }

    /// Uncompressed SEC1 public key (65 bytes), base64url without padding.
    pub fn public_key_base64(&self) -> String {
        B64URL.encode(self.signing.verifying_key().to_encoded_point(false).as_bytes())
    }

    pub fn sign(&self, payload: &str) -> String {
        let sig: Signature = self.signing.sign(payload.as_bytes());
        B64URL.encode(sig.to_bytes())
    }
}

/// Wire body of one push delivery.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PushMessage {
    /// JSON text of the notification.
    pub payload: String,
    /// Base64url raw `r || s` ECDSA P-256 SHA-256 signature over `payload`.
    pub signature: String,
}

impl PushMessage {
    pub fn signed(keys: &PushKeys, payload: &serde_json::Value) -> Self {
        let payload = payload.to_string();
        let signature = keys.sign(&payload);
        Self { payload, signature }
    }

    /// Checks the signature against a base64url public key.
    pub fn verify(&self, public_key_b64: &str) -> bool {
        let Ok(pk) = B64URL.decode(public_key_b64.trim_end_matches('=')) else {
            return false;
        };
        let Ok(key) = VerifyingKey::from_sec1_bytes(&pk) else {
            return false;
        };
        let Ok(sig_bytes) = B64URL.decode(&self.signature) else {
            return false;
        };
        let Ok(sig) = Signature::from_slice(&sig_bytes) else {
            return false;
        };
        key.verify(self.payload.as_bytes(), &sig).is_ok()
    }

    pub fn payload_json(&self) -> Option<serde_json::Value> {
        serde_json::from_str(&self.payload).ok()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeliveryReport {
    pub attempted: u64,
    pub delivered: u64,
}

impl DeliveryReport {
    pub fn merge(&mut self, other: DeliveryReport) {
        self.attempted += other.attempted;
        self.delivered += other.delivered;
    }
}

/// Delivers one message to one endpoint; `false` on any failure.
pub trait PushTransport: Send + Sync {
    fn deliver(&self, endpoint: &str, message: &PushMessage) -> bool;
}

/// Sends each message to every subscription once, without retries.
pub fn dispatch(transport: &dyn PushTransport, subs: &[Subscription], message: &PushMessage) -> DeliveryReport {
    let mut report = DeliveryReport::default();
    for sub in subs {
        report.attempted += 1;
        if transport.deliver(&sub.endpoint, message) {
            report.delivered += 1;
        } else {
            tracing::warn!(endpoint = %sub.endpoint, "push delivery failed");
        }
    }
    report
}

/// POSTs the message as JSON; any 2xx counts as delivered.
pub struct HttpPushTransport {
    agent: ureq::Agent,
}

impl HttpPushTransport {
    pub fn new() -> Self {
        Self { agent: ureq::AgentBuilder::new().timeout(Duration::from_secs(10)).build() }
    }
}

impl Default for HttpPushTransport {
    fn default() -> Self {
        Self::new()
    }
}

impl PushTransport for HttpPushTransport {
    fn deliver(&self, endpoint: &str, message: &PushMessage) -> bool {
        let body = serde_json::to_string(message).expect("push message serializes");
        let request = self.agent.post(endpoint).set("TTL", "86400").set("Content-Type", "application/json");
        match request.send_string(&body) {
            Ok(resp) => (200..300).contains(&resp.status()),
            Err(_) => false,
        }
    }
}

/// Records deliveries in memory. Endpoints listed in `failing` are refused.
#[derive(Default)]
pub struct RecordingTransport {
    delivered: Mutex<Vec<(String, PushMessage)>>,
    failing: Mutex<Vec<String>>,
}

impl RecordingTransport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fail_endpoint(&self, endpoint: &str) {
        self.failing.lock().unwrap().push(endpoint.to_owned());
    }

    pub fn deliveries(&self) -> Vec<(String, PushMessage)> {
        self.delivered.lock().unwrap().clone()
    }

    pub fn take(&self) -> Vec<(String, PushMessage)> {
        std::mem::take(&mut *self.delivered.lock().unwrap())
    }
}

impl PushTransport for RecordingTransport {
    fn deliver(&self, endpoint: &str, message: &PushMessage) -> bool {
        if self.failing.lock().unwrap().iter().any(|e| e == endpoint) {
            return false;
        }
        self.delivered.lock().unwrap().push((endpoint.to_owned(), message.clone()));
        true
    }
}
