// SPDX-License-Identifier: Apache-2.0

//! RSA-2048 keys with PKCS#1 v1.5 / SHA-256 signatures.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use rand::{CryptoRng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rsa::pkcs8::{DecodePrivateKey, DecodePublicKey, EncodePrivateKey, EncodePublicKey};
use rsa::traits::PublicKeyParts;
use rsa::{Pkcs1v15Sign, RsaPrivateKey, RsaPublicKey};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

pub const MODULUS_BITS: usize = 2048;

pub fn sha256(data: &[u8]) -> [u8; 32] {
    Sha256::digest(data).into()
}

/// RSA public key, compared and serialized by its DER SubjectPublicKeyInfo.
#[derive(Clone)]
pub struct PublicKey {
    key: RsaPublicKey,
    der: Vec<u8>,
}

impl PublicKey {
    pub fn from_der(der: &[u8]) -> Result<Self> {
        let key = RsaPublicKey::from_public_key_der(der)
            .map_err(|e| Error::InvalidKey(e.to_string()))?;
        if key.n().bits() != MODULUS_BITS {
            return Err(Error::InvalidKey(format!(
                "modulus is {} bits, expected {MODULUS_BITS}",
                key.n().bits()
            )));
        }
        Ok(Self { key, der: der.to_vec() })
    }

    fn from_rsa(key: RsaPublicKey) -> Self {
        let der = key
            .to_public_key_der()
            .expect("rsa public key always encodes")
            .as_bytes()
            .to_vec();
        Self { key, der }
    }

    pub fn der(&self) -> &[u8] {
        &self.der
    }

    /// SHA-256 of the DER encoding; this is what evidence binds to.
    pub fn digest(&self) -> [u8; 32] {
        sha256(&self.der)
    }

    pub fn verify(&self, message: &[u8], signature: &[u8]) -> bool {
        let hashed = sha256(message);
        self.key
            .verify(Pkcs1v15Sign::new::<Sha256>(), &hashed, signature)
            .is_ok()
    }
}

impl PartialEq for PublicKey {
    fn eq(&self, other: &Self) -> bool {
        self.der == other.der
    }
}

impl Eq for PublicKey {}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicKey({})", &hex::encode(self.digest())[..16])
    }
}

#[derive(Clone)]
pub struct KeyPair {
    secret: RsaPrivateKey,
    public: PublicKey,
}

impl KeyPair {
    pub fn generate<R: RngCore + CryptoRng>(rng: &mut R) -> Result<Self> {
        let secret = RsaPrivateKey::new(rng, MODULUS_BITS)
            .map_err(|e| Error::InvalidKey(e.to_string()))?;
        Ok(Self::from_rsa(secret))
    }

    fn from_rsa(secret: RsaPrivateKey) -> Self {
        let public = PublicKey::from_rsa(secret.to_public_key());
        Self { secret, public }
    }

    pub fn from_pkcs8_der(der: &[u8]) -> Result<Self> {
        let secret =
            RsaPrivateKey::from_pkcs8_der(der).map_err(|e| Error::InvalidKey(e.to_string()))?;
        if secret.n().bits() != MODULUS_BITS {
            return Err(Error::InvalidKey("modulus is not 2048 bits".into()));
        }
        Ok(Self::from_rsa(secret))
    }

    pub fn to_pkcs8_der(&self) -> Vec<u8> {
        self.secret
            .to_pkcs8_der()
            .expect("rsa private key always encodes")
            .as_bytes()
            .to_vec()
    }

    pub fn public(&self) -> &PublicKey {
        &self.public
    }

    pub fn sign(&self, message: &[u8]) -> Result<Vec<u8>> {
        let hashed = sha256(message);
        self.secret
            .sign(Pkcs1v15Sign::new::<Sha256>(), &hashed)
            .map_err(|e| Error::SigningFailure(e.to_string()))
    }
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyPair").field("public", &self.public).finish_non_exhaustive()
    }
}

/// Deterministic key derived from `seed`, cached for the life of the process.
///
/// For simulations and tests only: anyone who knows the seed knows the key.
pub fn seeded_keypair(seed: u64) -> KeyPair {
    static CACHE: OnceLock<Mutex<HashMap<u64, KeyPair>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(key) = cache.lock().expect("key cache").get(&seed) {
        return key.clone();
    }
    // Generated outside the lock; a racing thread derives the same key.
    let key = KeyPair::generate(&mut ChaCha20Rng::seed_from_u64(seed))
        .expect("rsa key generation with a seeded rng");
    cache.lock().expect("key cache").entry(seed).or_insert(key).clone()
}

#[cfg(test)]
pub(crate) mod test_keys {
    use super::KeyPair;

    pub fn key(i: usize) -> KeyPair {
        super::seeded_keypair(i as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::test_keys::key;
    use super::*;

    #[test]
    fn sign_and_verify() {
        let kp = key(0);
        let sig = kp.sign(b"payload").unwrap();
        assert_eq!(sig.len(), 256);
        assert!(kp.public().verify(b"payload", &sig));
        assert!(!kp.public().verify(b"payloaD", &sig));
        assert!(!key(1).public().verify(b"payload", &sig));
    }

    #[test]
    fn der_round_trip() {
        let kp = key(0);
        let pk = PublicKey::from_der(kp.public().der()).unwrap();
        assert_eq!(&pk, kp.public());
        let again = KeyPair::from_pkcs8_der(&kp.to_pkcs8_der()).unwrap();
        assert_eq!(again.public(), kp.public());
        assert_ne!(key(0).public(), key(1).public());
    }

    #[test]
    fn rejects_garbage_der() {
        assert!(PublicKey::from_der(b"not a key").is_err());
    }
}
