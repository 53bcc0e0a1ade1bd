// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::sync::Arc;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rawebs_core::{
    compute_reference_value, seeded_keypair, sha256, Clock, CodeBundle, Domain, Evidence, KeyPair,
    MemoryFetcher, PublicKey, RepositoryRef, TeeRoot, Timestamp, TrustAnchors,
};
use rawebs_ct::{Certificate, CertificateAuthority, CertificateIssuer, CtLog, CtStack, DelayPolicy, LogConfig};
use rawebs_ta_agent::{
    ta_provision_bundle, KeyStore, RegistrationReceipt, RegistrationRequest, Rejection, TaConfig, TaError,
    VerifierApi,
};
use rawebs_verifier::{
    Components, ProvisionRequest, PushKeys, RecordingTransport, Store, SubscriptionKeys, SubscriptionRequest,
    TaStatus, Verifier, VerifierError,
};

use crate::report::Event;
use crate::scenario::ScenarioSpec;

/// Simulated time at which every scenario starts.
pub const EPOCH: Timestamp = 1_700_000_000;
pub const TA_DOMAIN: &str = "ta.example.com";
pub const TA_REPOSITORY: &str = "https://git.example.org/shop/ta";
pub const ADMIN_CREDENTIAL: &str = "simulation-admin-credential";
const TEE_ID: &str = "sim-tee";

/// Fixed key seeds; scenario seeds only drive timing.
const TEE_SEED: u64 = 1_000;
const LOG_SEED: u64 = 1_001;
pub(crate) const TA_KEY_SEED: u64 = 1_002;
pub(crate) const ADVERSARY_KEY_SEED: u64 = 1_004;

/// Presents an in-process Verifier through the TA registration interface,
/// decoding the same wire fields the HTTP endpoint receives.
pub struct InProcessVerifier(pub Arc<Verifier>);

fn rejection(e: VerifierError) -> Rejection {
    Rejection { status: e.http_status(), code: e.code().into(), message: e.to_string() }
}

impl VerifierApi for InProcessVerifier {
    fn register(&self, token: &str, req: &RegistrationRequest) -> Result<RegistrationReceipt, Rejection> {
        let bad = |m: String| rejection(VerifierError::BadRequest(m));
        let der = STANDARD.decode(&req.public_key).map_err(|e| bad(e.to_string()))?;
        let request = ProvisionRequest {
            repository: req.repository.clone(),
            commit_id: req.commit_id.clone(),
            domain: Domain::canonicalize(&req.domain).map_err(|e| bad(e.to_string()))?,
            public_key: PublicKey::from_der(&der).map_err(|e| bad(e.to_string()))?,
            evidence: Evidence::from_base64(&req.evidence).map_err(|e| bad(e.to_string()))?,
        };
        let done = self.0.provision_ta(token, &request).map_err(rejection)?;
        Ok(RegistrationReceipt {
            id: done.server.id,
            domain: done.server.domain.to_string(),
            rv: done.code.unique_id.to_hex(),
        })
    }
}

/// All protocol entities of one scenario run.
pub struct World {
    pub spec: ScenarioSpec,
    pub clock: Clock,
    pub ct: Arc<CtStack>,
    pub fetcher: Arc<MemoryFetcher>,
    pub push: Arc<RecordingTransport>,
    pub verifier: Arc<Verifier>,
    pub tee: TeeRoot,
    pub ta_keys: KeyStore,
    token: String,
    next_poll: Timestamp,
    rng: ChaCha20Rng,
    events: Vec<Event>,
    pub first_violation_at: Option<Timestamp>,
    pub last_activation_at: Option<Timestamp>,
}

impl World {
    pub fn new(spec: ScenarioSpec) -> Self {
        let clock = Clock::simulated(EPOCH);
        let log = CtLog::new(
            seeded_keypair(LOG_SEED),
            LogConfig { log_id: None, mmd: spec.mmd, delay: DelayPolicy::Uniform { seed: spec.seed } },
        )
        .expect("uniform delay is always valid");
        let ct = Arc::new(CtStack::new(CertificateAuthority::new("sim-ca"), log, spec.monitor_lag, clock.clone()));
        let tee = TeeRoot::new(seeded_keypair(TEE_SEED), TEE_ID);
        let fetcher = Arc::new(MemoryFetcher::new());
        let push = Arc::new(RecordingTransport::new());
        let mut push_seed = b"push".to_vec();
        push_seed.extend_from_slice(&spec.seed.to_be_bytes());
        let push_keys = PushKeys::from_secret_bytes(&sha256(&push_seed)).expect("hash is a valid scalar");
        let verifier = Arc::new(Verifier::new(Components {
            store: Store::open_in_memory().expect("in-memory store"),
            anchors: TrustAnchors::new().with_root(TEE_ID, tee.public_key().clone()),
            fetcher: fetcher.clone(),
            monitor: ct.clone(),
            push: push.clone(),
            push_keys,
            admin_credential: ADMIN_CREDENTIAL.into(),
            clock: clock.clone(),
            provision_cap: None,
        }));
        let token = verifier.register_service(ADMIN_CREDENTIAL, "ta-owner").expect("admin credential").token;
        Self {
            rng: ChaCha20Rng::seed_from_u64(spec.seed),
            spec,
            clock,
            ct,
            fetcher,
            push,
            verifier,
            tee,
            ta_keys: KeyStore::with_key(seeded_keypair(TA_KEY_SEED)),
            token,
            next_poll: EPOCH,
            events: Vec::new(),
            first_violation_at: None,
            last_activation_at: None,
        }
    }

    pub fn domain(&self) -> Domain {
        Domain::canonicalize(TA_DOMAIN).expect("constant domain")
    }

    pub fn now(&self) -> Timestamp {
        self.clock.now()
    }

    pub fn event(&mut self, actor: &str, action: &str, detail: impl Into<String>) {
        self.events.push(Event {
            t: self.now() - EPOCH,
            actor: actor.into(),
            action: action.into(),
            detail: detail.into(),
        });
    }

    pub fn take_events(&mut self) -> Vec<Event> {
        std::mem::take(&mut self.events)
    }

    /// Seconds in `[0, bound)` drawn from the scenario seed.
    pub fn jitter(&mut self, bound: u64) -> u64 {
        if bound == 0 {
            0
        } else {
            self.rng.gen_range(0..bound)
        }
    }

    /// Publishes a TA source tree at `commit` and returns it.
    pub fn publish_code(&mut self, commit: &str, greeting: &str) -> CodeBundle {
        let bundle = CodeBundle::new(TA_REPOSITORY)
            .with_file("Cargo.toml", "[package]\nname = \"ta\"\n")
            .and_then(|b| b.with_file("src/main.rs", format!("fn main() {{ serve(\"{greeting}\") }}\n")))
            .expect("valid paths");
        self.fetcher.publish(RepositoryRef::new(TA_REPOSITORY, commit), bundle.clone());
        self.event("repository", "publish", format!("commit={commit} rv={}", compute_reference_value(&bundle)));
        bundle
    }

    pub fn ta_config(&self, commit: &str) -> TaConfig {
        TaConfig {
            domain: self.domain(),
            verifier_url: "http://verifier.sim".into(),
            ca_url: "http://ca.sim".into(),
            service_token: self.token.clone(),
            repository: TA_REPOSITORY.into(),
            commit_id: commit.into(),
            code_dir: PathBuf::new(),
            state_dir: PathBuf::new(),
            listen: "127.0.0.1:0".into(),
            tee_key: None,
            tee_id: TEE_ID.into(),
        }
    }

    /// Runs the TA provisioning client with `running` as the measured code.
    pub fn provision(&mut self, commit: &str, running: &CodeBundle) -> Result<(KeyPair, Certificate), TaError> {
        let config = self.ta_config(commit);
        let api = InProcessVerifier(self.verifier.clone());
        let mut rng = ChaCha20Rng::seed_from_u64(self.spec.seed);
        let result =
            ta_provision_bundle(&config, running, &self.tee, &self.clock, &self.ta_keys, &api, self.ct.as_ref(), &mut rng);
        match &result {
            Ok((_, cert)) => self.event("ta", "provisioned", format!("commit={commit} serial={}", cert.body.serial)),
            Err(e) => self.event("ta", "provision_failed", e.to_string()),
        }
        result
    }

    pub fn adversary_key(&self) -> KeyPair {
        seeded_keypair(ADVERSARY_KEY_SEED)
    }

    /// The adversary asks the same CA for a certificate on the TA domain.
    pub fn adversary_issue(&mut self) -> Certificate {
        let key = self.adversary_key();
        let cert = self.ct.issue(&self.domain(), key.public()).expect("in-process CA");
        let index = self.ct.log().len() - 1;
        let publish = self.ct.log().entry(index).expect("just appended").publish_time;
        self.event(
            "adversary",
            "certificate_issued",
            format!("serial={} log_index={index} merge_at={}", cert.body.serial, publish - EPOCH),
        );
        cert
    }

    pub fn subscribe_user(&mut self, user: &str) {
        let mut point = [0u8; 65];
        point[0] = 0x04;
        point[1..].copy_from_slice(&[sha256(user.as_bytes()), sha256(user.as_bytes())].concat()[..64]);
        let req = SubscriptionRequest {
            endpoint: format!("http://127.0.0.1/push/{user}"),
            keys: SubscriptionKeys {
                p256dh: STANDARD.encode(point),
                auth: STANDARD.encode(&sha256(user.as_bytes())[..16]),
            },
        };
        let sub = self.verifier.subscribe(&self.domain(), &req).expect("TA is registered");
        self.event("user", "subscribed", format!("user={user} subscription={}", sub.id));
    }

    fn poll(&mut self) {
        let report = self.verifier.monitoring_step().expect("in-memory store");
        for id in &report.activated {
            self.last_activation_at = Some(self.now());
            self.event("verifier", "activated", format!("server={id}"));
        }
        for v in &report.violations {
            self.first_violation_at.get_or_insert(self.now());
            self.event(
                "verifier",
                "violation",
                format!("violation={} log_index={}", v.id, v.offending_log_index),
            );
        }
        if report.delivery.attempted > 0 {
            self.event(
                "verifier",
                "notified",
                format!("attempted={} delivered={}", report.delivery.attempted, report.delivery.delivered),
            );
        }
    }

    /// Advances the clock to `target`, running the monitoring worker at each
    /// poll instant on the way.
    pub fn advance_to(&mut self, target: Timestamp) {
        while self.next_poll <= target {
            self.clock.advance_to(self.next_poll).expect("simulated clock");
            self.poll();
            self.next_poll += self.spec.poll_interval;
        }
        self.clock.advance_to(target).expect("simulated clock");
    }

    /// Steps time forward until `done` holds or `deadline` passes. Returns
    /// whether `done` held.
    pub fn run_until(&mut self, deadline: Timestamp, mut done: impl FnMut(&World) -> bool) -> bool {
        loop {
            if done(self) {
                return true;
            }
            if self.now() >= deadline {
                return false;
            }
            let next = (self.now() + self.spec.step).min(deadline);
            self.advance_to(next);
        }
    }

    pub fn status(&self) -> Result<TaStatus, VerifierError> {
        self.verifier.get_ta_status(&self.domain())
    }

    pub fn is_valid(&self) -> bool {
        self.status().map(|s| s.valid).unwrap_or(false)
    }

    pub fn deliveries_of_kind(&self, kind: &str) -> u64 {
        self.push
            .deliveries()
            .iter()
            .filter(|(_, m)| m.payload_json().is_some_and(|p| p["kind"] == kind))
            .count() as u64
    }

    pub fn bound(&self) -> u64 {
        self.spec.mmd + self.spec.monitor_lag + self.spec.poll_interval
    }
}
