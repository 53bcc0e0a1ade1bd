// SPDX-License-Identifier: Apache-2.0

//! Verifier operations: service accounts, TA provisioning, status lookup,
//! CT monitoring and notification dispatch.

use std::sync::Arc;

use base64::engine::general_purpose::{STANDARD, URL_SAFE_NO_PAD};
use base64::Engine;
use rand::RngCore;
use rawebs_core::{
    build_and_measure, Clock, Domain, Evidence, PublicKey, ReferenceValue, RepositoryFetcher,
    RepositoryRef, Timestamp, TrustAnchors,
};
use rawebs_ct::MonitorFeed;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Result, VerifierError};
use crate::push::{dispatch, DeliveryReport, PushKeys, PushMessage, PushTransport};
use crate::store::{Id, LogOutcome, NewRegistration, ServiceAccount, Store, Subscription, TaCode, TaServer, TaViolation};

pub const MAX_ENDPOINT_LEN: usize = 256;
const MAX_NAME_LEN: usize = 256;
const P256DH_LEN: usize = 65;
const AUTH_LEN: usize = 16;

/// Everything a [`Verifier`] is built from.
pub struct Components {
    pub store: Store,
    pub anchors: TrustAnchors,
    pub fetcher: Arc<dyn RepositoryFetcher>,
    pub monitor: Arc<dyn MonitorFeed>,
    pub push: Arc<dyn PushTransport>,
    pub push_keys: PushKeys,
    pub admin_credential: String,
    pub clock: Clock,
    /// Maximum number of TA registrations per service account.
    pub provision_cap: Option<u64>,
}

pub struct Verifier {
    store: Store,
    anchors: TrustAnchors,
    fetcher: Arc<dyn RepositoryFetcher>,
    monitor: Arc<dyn MonitorFeed>,
    push: Arc<dyn PushTransport>,
    push_keys: PushKeys,
    admin_credential: String,
    clock: Clock,
    provision_cap: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct ProvisionRequest {
    pub repository: String,
    pub commit_id: String,
    pub domain: Domain,
    pub public_key: PublicKey,
    pub evidence: Evidence,
}

#[derive(Debug, Clone)]
pub struct Provisioned {
    pub server: TaServer,
    pub code: TaCode,
    /// The server this registration replaced, if any.
    pub superseded: Option<Id>,
    pub reregistration: Option<DeliveryReport>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaState {
    /// Activated and without violations.
    Valid,
    /// Registered, own certificate not yet observed in the log.
    Pending,
    /// At least one violation recorded.
    Violated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationView {
    pub id: Id,
    pub created_at: Timestamp,
    pub offending_log_index: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistrationView {
    pub server_id: Id,
    pub rv: ReferenceValue,
    pub repository: String,
    pub commit_id: String,
    pub registered_at: Timestamp,
    pub is_active: bool,
    pub superseded_by: Option<Id>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaStatus {
    pub domain: Domain,
    pub valid: bool,
    pub state: TaState,
    pub server_id: Id,
    pub rv: ReferenceValue,
    pub repository: String,
    pub commit_id: String,
    pub registered_at: Timestamp,
    pub monitor_log_id: Option<u64>,
    pub violations: Vec<ViolationView>,
    /// Every registration for the domain, newest first.
    pub history: Vec<RegistrationView>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MonitoringReport {
    /// Log indices consumed this step.
    pub processed: u64,
    pub activated: Vec<Id>,
    pub violations: Vec<TaViolation>,
    pub delivery: DeliveryReport,
    /// Set when the monitor could not be reached.
    pub monitor_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubscriptionKeys {
    pub p256dh: String,
    pub auth: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubscriptionRequest {
    pub endpoint: String,
    pub keys: SubscriptionKeys,
}

fn constant_time_eq(a: &[u8], b: &[u8]) -> bool {
    a.len() == b.len() && a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

fn decode_b64_any(text: &str) -> Option<Vec<u8>> {
    let trimmed = text.trim_end_matches('=');
    URL_SAFE_NO_PAD
        .decode(trimmed)
        .ok()
        .or_else(|| base64::engine::general_purpose::STANDARD_NO_PAD.decode(trimmed).ok())
}

/// Checks a browser subscription and returns it with keys re-encoded as
/// unpadded base64url.
pub fn normalize_subscription(req: &SubscriptionRequest) -> Result<SubscriptionRequest> {
    use VerifierError::MalformedSubscription as Bad;
    if req.endpoint.len() > MAX_ENDPOINT_LEN {
        return Err(Bad("endpoint too long"));
    }
    let url = url::Url::parse(&req.endpoint).map_err(|_| Bad("endpoint is not a URL"))?;
    if !matches!(url.scheme(), "http" | "https") || url.host_str().is_none() {
        return Err(Bad("endpoint must be an http(s) URL"));
    }
    let p256dh = decode_b64_any(&req.keys.p256dh).ok_or(Bad("p256dh is not base64"))?;
    if p256dh.len() != P256DH_LEN || p256dh[0] != 0x04 {
        return Err(Bad("p256dh must be an uncompressed P-256 point"));
    }
    let auth = decode_b64_any(&req.keys.auth).ok_or(Bad("auth is not base64"))?;
    if auth.len() != AUTH_LEN {
        return Err(Bad("auth must be 16 bytes"));
    }
    Ok(SubscriptionRequest {
        endpoint: req.endpoint.clone(),
        keys: SubscriptionKeys {
            p256dh: URL_SAFE_NO_PAD.encode(p256dh),
            auth: URL_SAFE_NO_PAD.encode(auth),
        },
    })
}

impl Verifier {
    pub fn new(c: Components) -> Self {
        Self {
            store: c.store,
            anchors: c.anchors,
            fetcher: c.fetcher,
            monitor: c.monitor,
            push: c.push,
            push_keys: c.push_keys,
            admin_credential: c.admin_credential,
            clock: c.clock,
            provision_cap: c.provision_cap,
        }
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn clock(&self) -> &Clock {
        &self.clock
    }

    pub fn push_keys(&self) -> &PushKeys {
        &self.push_keys
    }

    fn check_admin(&self, credential: &str) -> Result<()> {
        if self.admin_credential.is_empty()
            || !constant_time_eq(credential.as_bytes(), self.admin_credential.as_bytes())
        {
            return Err(VerifierError::Unauthorized);
        }
        Ok(())
    }

    /// Creates a service account. The token is only ever returned here.
    pub fn register_service(&self, admin_credential: &str, name: &str) -> Result<ServiceAccount> {
        self.check_admin(admin_credential)?;
        if name.len() > MAX_NAME_LEN {
            return Err(VerifierError::BadRequest("name too long".into()));
        }
        let mut raw = [0u8; 32];
        rand::rngs::OsRng.fill_bytes(&mut raw);
        self.store.insert_service(name, &STANDARD.encode(raw))
    }

    fn authenticate(&self, token: &str) -> Result<ServiceAccount> {
        match self.store.service_by_token(token)? {
            Some(account) if account.is_active => Ok(account),
            _ => Err(VerifierError::Unauthorized),
        }
    }

    /// Registers a TA: authenticate, build, check the log for prior
    /// certificates, verify evidence, persist, then supersede older servers.
    pub fn provision_ta(&self, token: &str, req: &ProvisionRequest) -> Result<Provisioned> {
        let account = self.authenticate(token)?;
        if let Some(cap) = self.provision_cap {
            if self.store.count_servers_for_service(account.id)? >= cap {
                return Err(VerifierError::RateLimited);
            }
        }

        let origin = RepositoryRef { repository: req.repository.clone(), commit_id: req.commit_id.clone() };
        let (_, rv) = build_and_measure(self.fetcher.as_ref(), &origin).map_err(|e| VerifierError::BuildFailed {
            origin: format!("{}@{}", req.repository, req.commit_id),
            reason: e.to_string(),
        })?;

        let published = self
            .monitor
            .certs_for_domain(&req.domain)
            .map_err(|e| VerifierError::MonitorUnavailable(e.to_string()))?;
        // Certificates carrying a key this Verifier already confirmed for the
        // domain belong to an earlier registration and do not block a new one.
        let confirmed = self.store.confirmed_keys(&req.domain)?;
        let blocking: Vec<u64> = published
            .iter()
            .filter(|r| !confirmed.iter().any(|k| k.as_slice() == r.public_key.der()))
            .map(|r| r.index)
            .collect();
        if !blocking.is_empty() {
            return Err(VerifierError::PreexistingCertificate { log_indices: blocking });
        }

        let outcome = self.anchors.verify(&req.evidence, &rv, &req.public_key, self.clock.now());
        if !outcome.accepted() {
            return Err(VerifierError::EvidenceRejected(outcome.reason()));
        }

        let (code, server, superseded) = self.store.register_ta(NewRegistration {
            service: account.id,
            repository: &req.repository,
            commit_id: &req.commit_id,
            unique_id: rv,
            domain: &req.domain,
            public_key: req.public_key.der(),
            quote: &req.evidence.to_base64(),
            created_at: self.clock.now(),
        })?;
        tracing::info!(domain = %req.domain, server = server.id, rv = %rv, "TA registered");

        let reregistration = match superseded {
            Some(_) => Some(self.notify_reregistration(&req.domain)?),
            None => None,
        };
        Ok(Provisioned { server, code, superseded, reregistration })
    }

    pub fn get_ta_status(&self, domain: &Domain) -> Result<TaStatus> {
        let registrations = self.store.registrations(domain)?;
        let Some((server, code)) = registrations.first() else {
            return Err(VerifierError::NotFound);
        };
        let violations: Vec<ViolationView> = self
            .store
            .violations_for_server(server.id)?
            .into_iter()
            .map(|v| ViolationView { id: v.id, created_at: v.created_at, offending_log_index: v.offending_log_index })
            .collect();
        let valid = server.is_active && violations.is_empty();
        let state = if !violations.is_empty() {
            TaState::Violated
        } else if server.is_active {
            TaState::Valid
        } else {
            TaState::Pending
        };
        let history = registrations
            .iter()
            .map(|(s, c)| RegistrationView {
                server_id: s.id,
                rv: c.unique_id,
                repository: c.repository.clone(),
                commit_id: c.commit_id.clone(),
                registered_at: s.created_at,
                is_active: s.is_active,
                superseded_by: s.superseded_by,
            })
            .collect();
        Ok(TaStatus {
            domain: domain.clone(),
            valid,
            state,
            server_id: server.id,
            rv: code.unique_id,
            repository: code.repository.clone(),
            commit_id: code.commit_id.clone(),
            registered_at: server.created_at,
            monitor_log_id: server.monitor_log_id,
            violations,
            history,
        })
    }

    /// Consumes every log entry published since the last processed index.
    pub fn monitoring_step(&self) -> Result<MonitoringReport> {
        let start = self.store.next_log_index()?;
        let records = match self.monitor.entries_since(start) {
            Ok(records) => records,
            Err(e) => {
                tracing::warn!(error = %e, "CT monitor unavailable; retrying next tick");
                return Ok(MonitoringReport { monitor_error: Some(e.to_string()), ..Default::default() });
            }
        };
        let mut report = MonitoringReport::default();
        for record in records {
            let now = self.clock.now();
            match self.store.process_log_entry(record.index, &record.domain, record.public_key.der(), now)? {
                LogOutcome::AlreadyProcessed => continue,
                LogOutcome::Unregistered => {}
                LogOutcome::Activated { server } => {
                    tracing::info!(domain = %record.domain, server, index = record.index, "TA activated");
                    report.activated.push(server);
                }
                LogOutcome::Violation { violation, server } => {
                    tracing::warn!(domain = %record.domain, index = record.index, "certificate with foreign key");
                    report.delivery.merge(self.notify_violation(&server, &violation)?);
                    report.violations.push(violation);
                }
            }
            report.processed += 1;
        }
        Ok(report)
    }

    pub fn subscribe(&self, domain: &Domain, req: &SubscriptionRequest) -> Result<Subscription> {
        let req = normalize_subscription(req)?;
        let server = self.store.latest_server(domain)?.ok_or(VerifierError::NotFound)?;
        let (sub, _) = self.store.upsert_subscription(&req.endpoint, &req.keys.p256dh, &req.keys.auth, server.id)?;
        Ok(sub)
    }

    pub fn subscription_public_key(&self) -> String {
        self.push_keys.public_key_base64()
    }

    fn send(&self, subs: &[Subscription], payload: serde_json::Value) -> DeliveryReport {
        let message = PushMessage::signed(&self.push_keys, &payload);
        dispatch(self.push.as_ref(), subs, &message)
    }

    pub fn notify_violation(&self, server: &TaServer, violation: &TaViolation) -> Result<DeliveryReport> {
        let subs = self.store.subscriptions_for_server(server.id)?;
        Ok(self.send(
            &subs,
            json!({
                "kind": "violation",
                "domain": server.domain,
                "violation_id": violation.id,
                "created_at": violation.created_at,
                "offending_log_index": violation.offending_log_index,
            }),
        ))
    }

    pub fn notify_broadcast(&self, admin_credential: &str, message: &str) -> Result<DeliveryReport> {
        self.check_admin(admin_credential)?;
        let subs = self.store.all_subscriptions()?;
        Ok(self.send(&subs, json!({ "kind": "broadcast", "message": message })))
    }

    /// Tells subscribers of the most recently superseded server that the
    /// domain now points at a new registration.
    pub fn notify_reregistration(&self, domain: &Domain) -> Result<DeliveryReport> {
        let Some(old) = self.store.latest_superseded(domain)? else {
            return Ok(DeliveryReport::default());
        };
        let new_rv = match self.store.registrations(domain)?.first() {
            Some((_, code)) => code.unique_id,
            None => return Ok(DeliveryReport::default()),
        };
        let subs = self.store.subscriptions_for_server(old.id)?;
        Ok(self.send(&subs, json!({ "kind": "reregistered", "domain": domain, "new_rv": new_rv })))
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::store::Subscription;

    fn keys(p256dh: &[u8], auth: &[u8]) -> SubscriptionKeys {
        SubscriptionKeys { p256dh: STANDARD.encode(p256dh), auth: STANDARD.encode(auth) }
    }

    #[test]
    fn normalizes_padded_standard_base64() {
        let mut point = vec![0xfb; 65];
        point[0] = 4;
        let req = SubscriptionRequest { endpoint: "https://p.example/x".into(), keys: keys(&point, &[0xff; 16]) };
        let norm = normalize_subscription(&req).unwrap();
        assert!(!norm.keys.p256dh.contains(['+', '/', '=']));
        assert_eq!(URL_SAFE_NO_PAD.decode(&norm.keys.p256dh).unwrap(), point);
        assert_eq!(normalize_subscription(&norm).unwrap(), norm);
    }

    #[test]
    fn rejects_compressed_point() {
        let mut point = vec![1; 65];
        point[0] = 2;
        let req = SubscriptionRequest { endpoint: "https://p.example/x".into(), keys: keys(&point, &[0; 16]) };
        assert!(normalize_subscription(&req).is_err());
    }

    proptest! {
        #[test]
        fn accepted_subscriptions_fit_record_bound(path in "[a-zA-Z0-9_/-]{0,200}", body in any::<[u8; 64]>(), auth in any::<[u8; 16]>()) {
            let mut point = vec![4u8];
            point.extend_from_slice(&body);
            let endpoint = format!("https://push.example.net/{path}");
            let req = SubscriptionRequest { endpoint, keys: keys(&point, &auth) };
            if let Ok(norm) = normalize_subscription(&req) {
                let sub = Subscription { id: 1, endpoint: norm.endpoint, p256dh: norm.keys.p256dh, auth: norm.keys.auth, server: 1 };
                prop_assert!(sub.stored_size() <= 400);
            }
        }
    }
}
