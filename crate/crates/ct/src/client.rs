// SPDX-License-Identifier: Apache-2.0

//! Blocking HTTP client for a CT stack served by [`crate::service`].

use std::io::Read;
use std::time::Duration;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use rawebs_core::{Domain, PublicKey};

use crate::cert::Certificate;
use crate::log::SignedTreeHead;
use crate::monitor::{parse_records, MonitorFeed, MonitorRecord};
use crate::service::{IssueRequest, LogKeyResponse, SthResponse};
use crate::stack::CertificateIssuer;
use crate::{CtError, Result};

#[derive(Clone)]
pub struct HttpCt {
    base: String,
    agent: ureq::Agent,
}

fn transport_error(e: ureq::Error) -> CtError {
    match e {
        ureq::Error::Status(status, resp) => CtError::Rejected {
            status,
            body: resp.into_string().unwrap_or_default(),
        },
        ureq::Error::Transport(t) => CtError::Unavailable(t.to_string()),
    }
}

impl HttpCt {
    pub fn new(base_url: impl Into<String>) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(Duration::from_secs(30)).build();
        Self { base: base_url.into().trim_end_matches('/').to_owned(), agent }
    }

    fn get_text(&self, path: &str, query: &[(&str, &str)]) -> Result<String> {
        let mut req = self.agent.get(&format!("{}{path}", self.base));
        for (k, v) in query {
            req = req.query(k, v);
        }
        req.call()
            .map_err(transport_error)?
            .into_string()
            .map_err(|e| CtError::Unavailable(e.to_string()))
    }

    pub fn sth(&self) -> Result<SignedTreeHead> {
        let resp: SthResponse = serde_json::from_str(&self.get_text("/ct/sth", &[])?)
            .map_err(|_| CtError::Malformed("sth response"))?;
        let root = hex::decode(&resp.root_hash).map_err(|_| CtError::Malformed("sth root"))?;
        Ok(SignedTreeHead {
            tree_size: resp.tree_size,
            root_hash: root.try_into().map_err(|_| CtError::Malformed("sth root"))?,
            timestamp: resp.timestamp,
            signature: BASE64.decode(resp.signature).map_err(|_| CtError::Malformed("sth signature"))?,
        })
    }

    /// The log's identifier and public key, for SCT and STH verification.
    pub fn log_key(&self) -> Result<(String, PublicKey)> {
        let resp: LogKeyResponse = serde_json::from_str(&self.get_text("/ct/log-key", &[])?)
            .map_err(|_| CtError::Malformed("log key response"))?;
        let der = BASE64.decode(resp.public_key).map_err(|_| CtError::Malformed("log key"))?;
        Ok((resp.log_id, PublicKey::from_der(&der)?))
    }
}

impl CertificateIssuer for HttpCt {
    fn issue(&self, domain: &Domain, pk: &PublicKey) -> Result<Certificate> {
        let body = serde_json::to_string(&IssueRequest {
            domain: domain.to_string(),
            public_key: BASE64.encode(pk.der()),
        })
        .expect("request serializes");
        let resp = self
            .agent
            .post(&format!("{}/ca/issue", self.base))
            .set("Content-Type", "application/json")
            .send_string(&body)
            .map_err(transport_error)?;
        let mut bytes = Vec::new();
        resp.into_reader()
            .read_to_end(&mut bytes)
            .map_err(|e| CtError::Unavailable(e.to_string()))?;
        Certificate::from_bytes(&bytes)
    }
}

impl MonitorFeed for HttpCt {
    fn certs_for_domain(&self, domain: &Domain) -> Result<Vec<MonitorRecord>> {
        parse_records(&self.get_text("/monitor/certs", &[("domain", domain.as_str())])?)
    }

    fn entries_since(&self, start: u64) -> Result<Vec<MonitorRecord>> {
        parse_records(&self.get_text("/monitor/entries", &[("start", &start.to_string())])?)
    }
}
