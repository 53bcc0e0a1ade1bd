// SPDX-License-Identifier: Apache-2.0

//! Precertificates, certificates and SCTs with their binary encoding:
//!
//! ```text
//! "RAWEBS-CERT1" ‖ serial(8) ‖ len‖domain ‖ len‖pk_der ‖ not_before(8)
//!   ‖ not_after(8) ‖ len‖issuer ‖ poison(1) ‖ sct_count(2) ‖ SCTs
//! SCT = len‖log_id ‖ timestamp(8) ‖ entry_hash(32) ‖ len‖signature
//! ```
//!
//! All lengths are 8-byte big-endian.

use rawebs_core::codec::{Decoder, Encoder};
use rawebs_core::{sha256, Domain, KeyPair, PublicKey, Timestamp};

use crate::{CtError, Result};

const CERT_MAGIC: &[u8] = b"RAWEBS-CERT1";
const SCT_MAGIC: &[u8] = b"RAWEBS-SCT1";

/// Fields shared by a precertificate and the certificate issued from it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertificateBody {
    pub serial: u64,
    pub domain: Domain,
    pub public_key: PublicKey,
    pub not_before: Timestamp,
    pub not_after: Timestamp,
    pub issuer: String,
}

fn encode(body: &CertificateBody, poison: bool, scts: &[Sct]) -> Vec<u8> {
    let mut enc = Encoder::with_magic(CERT_MAGIC);
    enc.u64(body.serial)
        .str(body.domain.as_str())
        .bytes(body.public_key.der())
        .u64(body.not_before)
        .u64(body.not_after)
        .str(&body.issuer)
        .u8(u8::from(poison))
        .u16(u16::try_from(scts.len()).expect("sct count fits in u16"));
    for sct in scts {
        sct.encode_into(&mut enc);
    }
    enc.finish()
}

fn decode(bytes: &[u8]) -> Result<(CertificateBody, bool, Vec<Sct>)> {
    let mut dec = Decoder::new(bytes);
    dec.expect_magic(CERT_MAGIC)?;
    let serial = dec.u64()?;
    let domain = Domain::canonicalize(&dec.string()?)?;
    let public_key = PublicKey::from_der(dec.bytes()?)?;
    let not_before = dec.u64()?;
    let not_after = dec.u64()?;
    let issuer = dec.string()?;
    let poison = match dec.u8()? {
        0 => false,
        1 => true,
        _ => return Err(CtError::Malformed("poison flag")),
    };
    let count = dec.u16()?;
    let scts = (0..count).map(|_| Sct::decode_from(&mut dec)).collect::<Result<Vec<_>>>()?;
    dec.finish()?;
    let body = CertificateBody { serial, domain, public_key, not_before, not_after, issuer };
    Ok((body, poison, scts))
}

/// Poisoned pre-issuance certificate submitted to CT logs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Precertificate {
    pub body: CertificateBody,
}

impl Precertificate {
    pub fn poison(&self) -> bool {
        true
    }

    /// Canonical bytes; these are the Merkle leaf and the SCT entry preimage.
    pub fn to_bytes(&self) -> Vec<u8> {
        encode(&self.body, true, &[])
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        match decode(bytes)? {
            (body, true, scts) if scts.is_empty() => Ok(Self { body }),
            _ => Err(CtError::Malformed("not a precertificate")),
        }
    }

    pub fn entry_hash(&self) -> [u8; 32] {
        sha256(&self.to_bytes())
    }
}

/// Signed certificate timestamp: a log's promise to publish an entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sct {
    pub log_id: String,
    pub timestamp: Timestamp,
    pub entry_hash: [u8; 32],
    pub signature: Vec<u8>,
}

impl Sct {
    pub fn signed_payload(log_id: &str, timestamp: Timestamp, entry_hash: &[u8; 32]) -> Vec<u8> {
        let mut enc = Encoder::with_magic(SCT_MAGIC);
        enc.str(log_id).u64(timestamp).raw(entry_hash);
        enc.finish()
    }

    pub fn sign(
        key: &KeyPair,
        log_id: &str,
        timestamp: Timestamp,
        entry_hash: [u8; 32],
    ) -> Result<Self> {
        let signature = key.sign(&Self::signed_payload(log_id, timestamp, &entry_hash))?;
        Ok(Self { log_id: log_id.to_owned(), timestamp, entry_hash, signature })
    }

    pub fn verify(&self, log_key: &PublicKey) -> bool {
        log_key.verify(
            &Self::signed_payload(&self.log_id, self.timestamp, &self.entry_hash),
            &self.signature,
        )
    }

    fn encode_into(&self, enc: &mut Encoder) {
        enc.str(&self.log_id)
            .u64(self.timestamp)
            .raw(&self.entry_hash)
            .bytes(&self.signature);
    }

    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self> {
        Ok(Self {
            log_id: dec.string()?,
            timestamp: dec.u64()?,
            entry_hash: dec.array()?,
            signature: dec.bytes()?.to_vec(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub body: CertificateBody,
    pub embedded_scts: Vec<Sct>,
}

impl Certificate {
    pub fn poison(&self) -> bool {
        false
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        encode(&self.body, false, &self.embedded_scts)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        match decode(bytes)? {
            (body, false, scts) if !scts.is_empty() => Ok(Self { body, embedded_scts: scts }),
            _ => Err(CtError::Malformed("not a certificate")),
        }
    }

    /// The precertificate this certificate was finalized from.
    pub fn precertificate(&self) -> Precertificate {
        Precertificate { body: self.body.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rawebs_core::seeded_keypair;

    fn body(serial: u64, domain: &str) -> CertificateBody {
        CertificateBody {
            serial,
            domain: Domain::canonicalize(domain).unwrap(),
            public_key: seeded_keypair(10).public().clone(),
            not_before: 100,
            not_after: 200,
            issuer: "ca".into(),
        }
    }

    #[test]
    fn header_layout() {
        let bytes = Precertificate { body: body(7, "a.b") }.to_bytes();
        assert!(bytes.starts_with(b"RAWEBS-CERT1\0\0\0\0\0\0\0\x07\0\0\0\0\0\0\0\x03a.b"));
        // poison flag then a zero SCT count close the precertificate.
        assert_eq!(&bytes[bytes.len() - 3..], &[1, 0, 0]);
    }

    #[test]
    fn precert_and_cert_are_not_interchangeable() {
        let key = seeded_keypair(11);
        let pre = Precertificate { body: body(1, "a.b") };
        let sct = Sct::sign(&key, "log", 5, pre.entry_hash()).unwrap();
        assert!(sct.verify(key.public()));
        assert!(!sct.verify(seeded_keypair(10).public()));
        let cert = Certificate { body: pre.body.clone(), embedded_scts: vec![sct] };
        assert!(Precertificate::from_bytes(&cert.to_bytes()).is_err());
        assert!(Certificate::from_bytes(&pre.to_bytes()).is_err());
        assert_eq!(cert.precertificate(), pre);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn encoding_round_trips(serial in any::<u64>(), nb in any::<u64>(), na in any::<u64>(),
                                issuer in "[ -~]{0,16}", ts in any::<u64>(), hash in any::<[u8; 32]>(),
                                sig in proptest::collection::vec(any::<u8>(), 0..64), n in 1usize..4) {
            let mut b = body(serial, "x.example");
            b.not_before = nb;
            b.not_after = na;
            b.issuer = issuer;
            let pre = Precertificate { body: b.clone() };
            prop_assert_eq!(Precertificate::from_bytes(&pre.to_bytes()).unwrap(), pre);
            let sct = Sct { log_id: "l".into(), timestamp: ts, entry_hash: hash, signature: sig };
            let cert = Certificate { body: b, embedded_scts: vec![sct; n] };
            prop_assert_eq!(Certificate::from_bytes(&cert.to_bytes()).unwrap(), cert);
        }
    }
}
