// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};

use rawebs_core::Domain;
use serde::Deserialize;

use crate::{Result, TaError};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaConfig {
    pub domain: Domain,
    pub verifier_url: String,
    pub ca_url: String,
    pub service_token: String,
    pub repository: String,
    pub commit_id: String,
    /// Directory holding the code this TA runs; measured at provisioning.
    pub code_dir: PathBuf,
    /// Where the TA key and certificate are kept between runs.
    pub state_dir: PathBuf,
    #[serde(default = "default_listen")]
    pub listen: String,
    /// PKCS#8 DER secret key of the mock TEE root.
    #[serde(default)]
    pub tee_key: Option<PathBuf>,
    #[serde(default = "default_tee_id")]
    pub tee_id: String,
}

fn default_listen() -> String {
    "127.0.0.1:8443".into()
}

fn default_tee_id() -> String {
    "mock-tee".into()
}

impl TaConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| TaError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("verifier_url", &self.verifier_url), ("ca_url", &self.ca_url)] {
            let url = url::Url::parse(value).map_err(|e| TaError::Config(format!("{name}: {e}")))?;
            if !matches!(url.scheme(), "http" | "https") {
                return Err(TaError::Config(format!("{name} must be http(s)")));
            }
        }
        if !self.code_dir.is_dir() {
            return Err(TaError::Config(format!("code_dir {} is not a directory", self.code_dir.display())));
        }
        if self.service_token.is_empty() {
            return Err(TaError::Config("service_token is empty".into()));
        }
        Ok(())
    }

    /// The status page URL users are sent to.
    pub fn status_url(&self) -> String {
        format!("{}/app/verification-status", self.verifier_url.trim_end_matches('/'))
    }
}
