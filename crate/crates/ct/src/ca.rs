// SPDX-License-Identifier: Apache-2.0

use std::sync::atomic::{AtomicU64, Ordering};

use rawebs_core::{Clock, Domain, PublicKey};

use crate::cert::{Certificate, CertificateBody, Precertificate, Sct};
use crate::{CtError, Result};

/// 90 days, the lifetime ACME CAs typically issue.
pub const DEFAULT_VALIDITY: u64 = 90 * 86_400;

/// Issues precertificates and turns them into certificates once SCTs arrive.
/// Domain control is assumed, not validated.
#[derive(Debug)]
pub struct CertificateAuthority {
    issuer: String,
    validity: u64,
    next_serial: AtomicU64,
}

impl CertificateAuthority {
    pub fn new(issuer: impl Into<String>) -> Self {
        Self::with_validity(issuer, DEFAULT_VALIDITY)
    }

    pub fn with_validity(issuer: impl Into<String>, validity: u64) -> Self {
        Self { issuer: issuer.into(), validity, next_serial: AtomicU64::new(1) }
    }

    pub fn issuer(&self) -> &str {
        &self.issuer
    }

    pub fn issue_precertificate(&self, domain: &Domain, pk: &PublicKey, clock: &Clock) -> Precertificate {
        let not_before = clock.now();
        Precertificate {
            body: CertificateBody {
                serial: self.next_serial.fetch_add(1, Ordering::SeqCst),
                domain: domain.clone(),
                public_key: pk.clone(),
                not_before,
                not_after: not_before + self.validity,
                issuer: self.issuer.clone(),
            },
        }
    }

    pub fn finalize_certificate(&self, precert: Precertificate, scts: Vec<Sct>) -> Result<Certificate> {
        let expected = precert.entry_hash();
        if scts.is_empty() || scts.iter().any(|s| s.entry_hash != expected) {
            return Err(CtError::SctMismatch);
        }
        Ok(Certificate { body: precert.body, embedded_scts: scts })
    }
}
