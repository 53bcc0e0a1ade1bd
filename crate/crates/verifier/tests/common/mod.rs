// SPDX-License-Identifier: Apache-2.0
#![allow(dead_code)]

use std::sync::Arc;

use rawebs_core::{
    compute_reference_value, generate_evidence, seeded_keypair, Clock, CodeBundle, Domain, KeyPair,
    MemoryFetcher, ReferenceValue, RepositoryRef, TeeRoot, TrustAnchors,
};
use rawebs_ct::{CertificateAuthority, CertificateIssuer, CtLog, CtStack, DelayPolicy, LogConfig};
use rawebs_verifier::{
    Components, ProvisionRequest, Provisioned, PushKeys, RecordingTransport, Store, Verifier,
};

pub const ADMIN: &str = "admin-credential-0123456789";
pub const MMD: u64 = 600;
pub const TEE_ID: &str = "test-tee";

pub fn domain(s: &str) -> Domain {
    Domain::canonicalize(s).unwrap()
}

pub fn ta_key() -> KeyPair {
    seeded_keypair(202)
}

pub fn other_key() -> KeyPair {
    seeded_keypair(203)
}

pub fn adversary_key() -> KeyPair {
    seeded_keypair(204)
}

pub struct Fixture {
    pub clock: Clock,
    pub ct: Arc<CtStack>,
    pub fetcher: Arc<MemoryFetcher>,
    pub push: Arc<RecordingTransport>,
    pub tee: TeeRoot,
    pub verifier: Arc<Verifier>,
    pub token: String,
}

impl Fixture {
    pub fn new() -> Self {
        Self::build(Store::open_in_memory().unwrap(), None)
    }

    pub fn build(store: Store, provision_cap: Option<u64>) -> Self {
        let clock = Clock::simulated(1_700_000_000);
        let log = CtLog::new(
            seeded_keypair(201),
            LogConfig { log_id: None, mmd: MMD, delay: DelayPolicy::Fixed(MMD) },
        )
        .unwrap();
        let ct = Arc::new(CtStack::new(CertificateAuthority::new("test-ca"), log, 0, clock.clone()));
        Self::with_parts(store, provision_cap, clock, ct)
    }

    /// A second Verifier over the same CT stack and clock, e.g. after a restart.
    pub fn restart(&self, store: Store) -> Self {
        Self::with_parts(store, None, self.clock.clone(), self.ct.clone())
    }

    fn with_parts(store: Store, provision_cap: Option<u64>, clock: Clock, ct: Arc<CtStack>) -> Self {
        let tee = TeeRoot::new(seeded_keypair(200), TEE_ID);
        let fetcher = Arc::new(MemoryFetcher::new());
        let push = Arc::new(RecordingTransport::new());
        let verifier = Arc::new(Verifier::new(Components {
            store,
            anchors: TrustAnchors::new().with_root(TEE_ID, tee.public_key().clone()),
            fetcher: fetcher.clone(),
            monitor: ct.clone(),
            push: push.clone(),
            push_keys: PushKeys::from_secret_bytes(&[7u8; 32]).unwrap(),
            admin_credential: ADMIN.into(),
            clock: clock.clone(),
            provision_cap,
        }));
        let existing = verifier.store().service_by_token("fixture-token").unwrap();
        let token = match existing {
            Some(a) => a.token,
            None => verifier.store().insert_service("fixture", "fixture-token").unwrap().token,
        };
        Self { clock, ct, fetcher, push, tee, verifier, token }
    }

    /// Publishes a one-file repository and returns its reference value.
    pub fn publish_code(&self, repository: &str, commit: &str, content: &str) -> ReferenceValue {
        let bundle = CodeBundle::new(repository).with_file("main.rs", content).unwrap();
        let rv = compute_reference_value(&bundle);
        self.fetcher.publish(RepositoryRef::new(repository, commit), bundle);
        rv
    }

    pub fn request(&self, d: &str, key: &KeyPair, repository: &str, commit: &str, rv: ReferenceValue) -> ProvisionRequest {
        ProvisionRequest {
            repository: repository.into(),
            commit_id: commit.into(),
            domain: domain(d),
            public_key: key.public().clone(),
            evidence: generate_evidence(&self.tee, rv, key.public(), &self.clock).unwrap(),
        }
    }

    /// Publishes code, generates honest evidence and registers.
    pub fn provision(&self, d: &str, key: &KeyPair, commit: &str) -> rawebs_verifier::Result<Provisioned> {
        let rv = self.publish_code("repo", commit, commit);
        let req = self.request(d, key, "repo", commit, rv);
        self.verifier.provision_ta(&self.token, &req)
    }

    pub fn issue(&self, d: &str, key: &KeyPair) {
        self.ct.issue(&domain(d), key.public()).unwrap();
    }

    /// Lets every submitted entry reach the monitor.
    pub fn settle(&self) {
        self.clock.advance(MMD).unwrap();
    }

    /// Provision, certificate issuance and activation of one TA.
    pub fn activate(&self, d: &str, key: &KeyPair, commit: &str) -> Provisioned {
        let p = self.provision(d, key, commit).unwrap();
        self.issue(d, key);
        self.settle();
        self.verifier.monitoring_step().unwrap();
        p
    }
}

pub fn subscription(endpoint: &str) -> rawebs_verifier::SubscriptionRequest {
    use base64::engine::general_purpose::URL_SAFE_NO_PAD;
    use base64::Engine;
    let mut point = [9u8; 65];
    point[0] = 0x04;
    rawebs_verifier::SubscriptionRequest {
        endpoint: endpoint.into(),
        keys: rawebs_verifier::SubscriptionKeys {
            p256dh: URL_SAFE_NO_PAD.encode(point),
            auth: URL_SAFE_NO_PAD.encode([3u8; 16]),
        },
    }
}
