// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::str::FromStr;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::clock::Timestamp;
use crate::codec::{Decoder, Encoder};
use crate::{Error, Result};

const EVIDENCE_MAGIC: &[u8] = b"RAWEBS-EV1";

/// Code measurement (the MRENCLAVE analogue): SHA-256 of a canonical bundle.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ReferenceValue(pub [u8; 32]);

impl ReferenceValue {
    pub fn from_slice(bytes: &[u8]) -> Result<Self> {
        let arr: [u8; 32] =
            bytes.try_into().map_err(|_| Error::Malformed("reference value must be 32 bytes"))?;
        Ok(Self(arr))
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Display for ReferenceValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for ReferenceValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ReferenceValue({})", self.to_hex())
    }
}

impl FromStr for ReferenceValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bytes = hex::decode(s).map_err(|_| Error::Malformed("reference value is not hex"))?;
        Self::from_slice(&bytes)
    }
}

impl Serialize for ReferenceValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for ReferenceValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(deserializer)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Mock TEE quote binding a reference value to the digest of a TA public key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evidence {
    pub rv: ReferenceValue,
    pub pk_digest: [u8; 32],
    pub tee_id: String,
    pub issued_at: Timestamp,
    pub signature: Vec<u8>,
}

impl Evidence {
    /// The bytes the TEE root signs.
    pub fn payload(&self) -> Vec<u8> {
        let mut enc = Encoder::with_magic(EVIDENCE_MAGIC);
        enc.raw(&self.rv.0)
            .raw(&self.pk_digest)
            .str(&self.tee_id)
            .u64(self.issued_at);
        enc.finish()
    }

    /// `len(payload) ‖ payload ‖ len(signature) ‖ signature`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        enc.bytes(&self.payload()).bytes(&self.signature);
        enc.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut outer = Decoder::new(bytes);
        let payload = outer.bytes()?;
        let signature = outer.bytes()?.to_vec();
        outer.finish()?;

        let mut dec = Decoder::new(payload);
        dec.expect_magic(EVIDENCE_MAGIC)?;
        let rv = ReferenceValue(dec.array()?);
        let pk_digest = dec.array()?;
        let tee_id = dec.string()?;
        let issued_at = dec.u64()?;
        dec.finish()?;
        Ok(Self { rv, pk_digest, tee_id, issued_at, signature })
    }

    pub fn to_base64(&self) -> String {
        BASE64.encode(self.to_bytes())
    }

    pub fn from_base64(text: &str) -> Result<Self> {
        let bytes = BASE64
            .decode(text.trim())
            .map_err(|_| Error::Malformed("evidence is not base64"))?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_evidence() -> impl Strategy<Value = Evidence> {
        (
            any::<[u8; 32]>(),
            any::<[u8; 32]>(),
            "[ -~]{0,24}",
            any::<u64>(),
            proptest::collection::vec(any::<u8>(), 0..300),
        )
            .prop_map(|(rv, pk_digest, tee_id, issued_at, signature)| Evidence {
                rv: ReferenceValue(rv),
                pk_digest,
                tee_id,
                issued_at,
                signature,
            })
    }

    #[test]
    fn payload_layout() {
        let ev = Evidence {
            rv: ReferenceValue([0xaa; 32]),
            pk_digest: [0xbb; 32],
            tee_id: "t".into(),
            issued_at: 0x0102,
            signature: vec![],
        };
        let mut expected = b"RAWEBS-EV1".to_vec();
        expected.extend([0xaa; 32]);
        expected.extend([0xbb; 32]);
        expected.extend([0, 0, 0, 0, 0, 0, 0, 1, b't']);
        expected.extend([0, 0, 0, 0, 0, 0, 1, 2]);
        assert_eq!(ev.payload(), expected);
    }

    #[test]
    fn rejects_trailing_garbage() {
        let ev = Evidence {
            rv: ReferenceValue([1; 32]),
            pk_digest: [2; 32],
            tee_id: "tee".into(),
            issued_at: 5,
            signature: vec![9; 4],
        };
        let mut bytes = ev.to_bytes();
        bytes.push(0);
        assert!(Evidence::from_bytes(&bytes).is_err());
        assert!(Evidence::from_base64("!!!").is_err());
    }

    #[test]
    fn reference_value_hex() {
        let rv: ReferenceValue = "00".repeat(32).parse().unwrap();
        assert_eq!(rv, ReferenceValue([0; 32]));
        assert!("abcd".parse::<ReferenceValue>().is_err());
    }

    proptest! {
        #[test]
        fn wire_round_trip(ev in arb_evidence()) {
            prop_assert_eq!(Evidence::from_bytes(&ev.to_bytes()).unwrap(), ev.clone());
            prop_assert_eq!(Evidence::from_base64(&ev.to_base64()).unwrap(), ev);
        }
    }
}
