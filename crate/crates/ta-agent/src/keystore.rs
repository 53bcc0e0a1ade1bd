// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::sync::Mutex;

use rand::{CryptoRng, RngCore};
use rawebs_core::KeyPair;
use rawebs_ct::Certificate;

use crate::{Result, TaError};

const KEY_FILE: &str = "ta-key.der";
const CERT_FILE: &str = "ta-cert.bin";

/// Persistent TA key and certificate. The key is generated once and reused
/// on every later provisioning run.
pub enum KeyStore {
    Dir(PathBuf),
    Memory(Box<Mutex<(Option<KeyPair>, Option<Certificate>)>>),
}

impl KeyStore {
    pub fn dir(path: impl Into<PathBuf>) -> Self {
        Self::Dir(path.into())
    }

    pub fn memory() -> Self {
        Self::Memory(Box::new(Mutex::new((None, None))))
    }

    /// Memory store preloaded with a key, for deterministic runs.
    pub fn with_key(key: KeyPair) -> Self {
        Self::Memory(Box::new(Mutex::new((Some(key), None))))
    }

    pub fn load_key(&self) -> Result<Option<KeyPair>> {
        match self {
            Self::Dir(dir) => {
                let path = dir.join(KEY_FILE);
                if !path.exists() {
                    return Ok(None);
                }
                Ok(Some(KeyPair::from_pkcs8_der(&std::fs::read(path)?)?))
            }
            Self::Memory(m) => Ok(m.lock().unwrap().0.clone()),
        }
    }

    pub fn load_or_generate<R: RngCore + CryptoRng>(&self, rng: &mut R) -> Result<KeyPair> {
        if let Some(key) = self.load_key()? {
            return Ok(key);
        }
        let key = KeyPair::generate(rng)?;
        match self {
            Self::Dir(dir) => {
                std::fs::create_dir_all(dir)?;
                write_private(&dir.join(KEY_FILE), &key.to_pkcs8_der())?;
            }
            Self::Memory(m) => m.lock().unwrap().0 = Some(key.clone()),
        }
        Ok(key)
    }

    pub fn save_certificate(&self, cert: &Certificate) -> Result<()> {
        match self {
            Self::Dir(dir) => {
                std::fs::create_dir_all(dir)?;
                std::fs::write(dir.join(CERT_FILE), cert.to_bytes())?;
            }
            Self::Memory(m) => m.lock().unwrap().1 = Some(cert.clone()),
        }
        Ok(())
    }

    pub fn load_certificate(&self) -> Result<Option<Certificate>> {
        match self {
            Self::Dir(dir) => {
                let path = dir.join(CERT_FILE);
                if !path.exists() {
                    return Ok(None);
                }
                let bytes = std::fs::read(path)?;
                Certificate::from_bytes(&bytes)
                    .map(Some)
                    .map_err(|e| TaError::Config(format!("stored certificate: {e}")))
            }
            Self::Memory(m) => Ok(m.lock().unwrap().1.clone()),
        }
    }
}

#[cfg(unix)]
fn write_private(path: &std::path::Path, bytes: &[u8]) -> std::io::Result<()> {
    use std::io::Write;
    use std::os::unix::fs::OpenOptionsExt;
    let mut f = std::fs::OpenOptions::new().write(true).create(true).truncate(true).mode(0o600).open(path)?;
    f.write_all(bytes)
}

#[cfg(not(unix))]
fn write_private(path: &std::path::Path, bytes: &[u8]) -> std::io::Result<()> {
    std::fs::write(path, bytes)
}
