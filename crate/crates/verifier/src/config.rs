// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use rawebs_core::PublicKey;
use serde::Deserialize;

/// Verifier settings, read from a TOML file and then overridden by
/// `RAWEBS_*` environment variables.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifierConfig {
    pub listen: String,
    pub store_path: PathBuf,
    pub admin_credential: String,
    /// TEE identifier the root key below is registered under.
    pub tee_id: String,
    /// DER or base64 DER file holding the TEE root public key.
    pub tee_root_public_key: Option<PathBuf>,
    /// Base URL of the CT log/monitor service.
    pub ct_url: String,
    /// Seconds between monitoring steps.
    pub poll_interval: u64,
    /// Base64url P-256 secret scalar used to sign push messages.
    pub push_secret_key: Option<String>,
    /// Directory served under `/static` and for the status page.
    pub assets_dir: Option<PathBuf>,
    pub provision_cap: Option<u64>,
    /// Host name users reach the Verifier under. Referers from this host are
    /// never treated as TA domains. Defaults to the request's Host header.
    pub public_host: Option<String>,
    /// Reject evidence older than this many seconds.
    pub evidence_max_age: Option<u64>,
}

impl Default for VerifierConfig {
    fn default() -> Self {
        Self {
            listen: "127.0.0.1:8480".into(),
            store_path: "rawebs-verifier.db".into(),
            admin_credential: String::new(),
            tee_id: "mock-tee".into(),
            tee_root_public_key: None,
            ct_url: "http://127.0.0.1:8470".into(),
            poll_interval: 600,
            push_secret_key: None,
            assets_dir: None,
            provision_cap: None,
            public_host: None,
            evidence_max_age: None,
        }
    }
}

impl VerifierConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Loads `path` if given, applies environment overrides and validates.
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let mut config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                Self::from_toml(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => Self::default(),
        };
        config.apply_env(|k| std::env::var(k).ok());
        config.validate()?;
        Ok(config)
    }

    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) {
        if let Some(v) = var("RAWEBS_ADMIN_CREDENTIAL") {
            self.admin_credential = v;
        }
        if let Some(v) = var("RAWEBS_STORE_PATH") {
            self.store_path = v.into();
        }
        if let Some(v) = var("RAWEBS_LISTEN") {
            self.listen = v;
        }
        if let Some(v) = var("RAWEBS_CT_URL") {
            self.ct_url = v;
        }
        if let Some(v) = var("RAWEBS_PUSH_SECRET_KEY") {
            self.push_secret_key = Some(v);
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.admin_credential.len() < 16 {
            bail!("admin_credential must be at least 16 characters");
        }
        if self.poll_interval == 0 {
            bail!("poll_interval must be positive");
        }
        url::Url::parse(&self.ct_url).context("ct_url")?;
        Ok(())
    }

    pub fn read_tee_root(&self) -> anyhow::Result<Option<PublicKey>> {
        let Some(path) = &self.tee_root_public_key else {
            return Ok(None);
        };
        let raw = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        let der = match std::str::from_utf8(&raw) {
            Ok(text) => STANDARD.decode(text.trim()).context("TEE root key is not base64")?,
            Err(_) => raw,
        };
        Ok(Some(PublicKey::from_der(&der)?))
    }
}
