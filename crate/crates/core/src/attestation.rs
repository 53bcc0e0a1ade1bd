// SPDX-License-Identifier: Apache-2.0

//! Mock TEE and the Verifier-side evidence check.
//!
//! A [`TeeRoot`] plays the hardware vendor: it signs evidence binding a code
//! measurement to a TA public key. Verifiers hold the root public keys as
//! trust anchors.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::bundle::CodeBundle;
use crate::clock::{Clock, Timestamp};
use crate::crypto::{sha256, KeyPair, PublicKey};
use crate::evidence::{Evidence, ReferenceValue};
use crate::Result;

/// SHA-256 over the canonical bundle bytes.
///
/// Real TEEs measure the built executable; measuring the source tree keeps
/// the measurement independent of any toolchain.
pub fn compute_reference_value(bundle: &CodeBundle) -> ReferenceValue {
    ReferenceValue(sha256(&bundle.canonical_bytes()))
}

#[derive(Debug, Clone)]
pub struct TeeRoot {
    keypair: KeyPair,
    tee_id: String,
}

impl TeeRoot {
    pub fn new(keypair: KeyPair, tee_id: impl Into<String>) -> Self {
        Self { keypair, tee_id: tee_id.into() }
    }

    pub fn tee_id(&self) -> &str {
        &self.tee_id
    }

    pub fn public_key(&self) -> &PublicKey {
        self.keypair.public()
    }

    /// Signs an arbitrary evidence payload. Exposed so tests can forge
    /// correctly signed evidence with altered fields.
    pub fn sign_evidence(&self, mut evidence: Evidence) -> Result<Evidence> {
        evidence.signature = self.keypair.sign(&evidence.payload())?;
        Ok(evidence)
    }
}

pub fn generate_evidence(
    tee: &TeeRoot,
    rv: ReferenceValue,
    pk: &PublicKey,
    clock: &Clock,
) -> Result<Evidence> {
    tee.sign_evidence(Evidence {
        rv,
        pk_digest: pk.digest(),
        tee_id: tee.tee_id.clone(),
        issued_at: clock.now(),
        signature: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerificationReason {
    Ok,
    BadSignature,
    RvMismatch,
    PkMismatch,
    UnknownRoot,
    Stale,
}

impl fmt::Display for VerificationReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Ok => "ok",
            Self::BadSignature => "bad_signature",
            Self::RvMismatch => "rv_mismatch",
            Self::PkMismatch => "pk_mismatch",
            Self::UnknownRoot => "unknown_root",
            Self::Stale => "stale",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct VerificationOutcome {
    accepted: bool,
    reason: VerificationReason,
}

impl VerificationOutcome {
    pub fn from_reason(reason: VerificationReason) -> Self {
        Self { accepted: reason == VerificationReason::Ok, reason }
    }

    pub fn accepted(&self) -> bool {
        self.accepted
    }

    pub fn reason(&self) -> VerificationReason {
        self.reason
    }
}

/// Checks run in order: signature, reference value, key binding.
pub fn verify_evidence(
    ev: &Evidence,
    expected_rv: &ReferenceValue,
    pk: &PublicKey,
    root_pk: &PublicKey,
) -> VerificationOutcome {
    use VerificationReason::*;
    let reason = if !root_pk.verify(&ev.payload(), &ev.signature) {
        BadSignature
    } else if ev.rv != *expected_rv {
        RvMismatch
    } else if ev.pk_digest != pk.digest() {
        PkMismatch
    } else {
        Ok
    };
    VerificationOutcome::from_reason(reason)
}

/// Optional evidence age check. Off unless configured.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum FreshnessPolicy {
    #[default]
    Disabled,
    /// Reject evidence issued before this instant, e.g. the disclosure date
    /// of the last known TEE vulnerability.
    NotBefore(Timestamp),
    /// Reject evidence older than this many seconds at verification time.
    MaxAge(u64),
}

/// The set of TEE roots a Verifier trusts, keyed by TEE identifier.
#[derive(Debug, Clone, Default)]
pub struct TrustAnchors {
    roots: BTreeMap<String, PublicKey>,
    freshness: FreshnessPolicy,
}

impl TrustAnchors {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_root(mut self, tee_id: impl Into<String>, root: PublicKey) -> Self {
        self.roots.insert(tee_id.into(), root);
        self
    }

    pub fn with_freshness(mut self, freshness: FreshnessPolicy) -> Self {
        self.freshness = freshness;
        self
    }

    pub fn root(&self, tee_id: &str) -> Option<&PublicKey> {
        self.roots.get(tee_id)
    }

    pub fn verify(
        &self,
        ev: &Evidence,
        expected_rv: &ReferenceValue,
        pk: &PublicKey,
        now: Timestamp,
    ) -> VerificationOutcome {
        let Some(root) = self.roots.get(&ev.tee_id) else {
            return VerificationOutcome::from_reason(VerificationReason::UnknownRoot);
        };
        let outcome = verify_evidence(ev, expected_rv, pk, root);
        if !outcome.accepted() {
            return outcome;
        }
        let stale = match self.freshness {
            FreshnessPolicy::Disabled => false,
            FreshnessPolicy::NotBefore(t) => ev.issued_at < t,
            FreshnessPolicy::MaxAge(age) => now.saturating_sub(ev.issued_at) > age,
        };
        if stale {
            VerificationOutcome::from_reason(VerificationReason::Stale)
        } else {
            outcome
        }
    }
}
