// SPDX-License-Identifier: Apache-2.0

//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::HashSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rawebs_core::{
    compute_reference_value, generate_evidence, seeded_keypair, verify_evidence, Clock, CodeBundle, Domain,
    Evidence, KeyPair, MemoryFetcher, ReferenceValue, RepositoryRef, TeeRoot, TrustAnchors,
};
use rawebs_ct::merkle::{verify_consistency, verify_inclusion, Hash};
use rawebs_ct::{CertificateAuthority, CtError, CtLog, DelayPolicy, LogConfig, MonitorFeed, MonitorRecord};
use rawebs_sim::{run_scenario, Outcome, ScenarioName, ScenarioReport, ScenarioSpec, World, EPOCH};
use rawebs_verifier::store::NewRegistration;
use rawebs_verifier::{
    router, ApiState, Components, ProvisionRequest, PushKeys, RecordingTransport, Store, Verifier, VerifierError,
};
use sha2::{Digest, Sha256};
use tower::ServiceExt;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

macro_rules! check {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn c1_happy_path() -> Verdict {
    let started = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_rawebs-sim"))
        .args(["run", "--scenario", "happy_path"])
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    check!(out.status.success(), "exit status {}: {}", out.status, String::from_utf8_lossy(&out.stderr));
    let report: ScenarioReport = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    check!(report.final_valid == Some(true), "final valid = {:?}", report.final_valid);
    check!(!report.events.iter().any(|e| e.action == "violation"), "violations recorded");
    check!(report.events.iter().any(|e| e.action == "activated"), "TA never activated");
    check!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!("valid=true, 0 violations, {} ms", elapsed.as_millis()))
}

fn c2_impersonation_bound() -> Verdict {
    let mut worst = 0;
    let mut slowest = Duration::ZERO;
    for seed in 0..5 {
        let spec = ScenarioSpec {
            name: ScenarioName::DomainImpersonation,
            mmd: 86_400,
            monitor_lag: 0,
            poll_interval: 600,
            seed,
            step: 60,
        };
        let started = Instant::now();
        let a = run_scenario(&spec).map_err(|e| e.to_string())?;
        slowest = slowest.max(started.elapsed());
        let b = run_scenario(&spec).map_err(|e| e.to_string())?;
        check!(a.to_json() == b.to_json(), "seed {seed}: reports differ between runs");
        check!(a.outcome == Outcome::Detected, "seed {seed}: outcome {:?}", a.outcome);
        let latency = a.detection_latency.ok_or("no latency")?;
        check!(latency <= 87_000, "seed {seed}: latency {latency}");
        check!(a.notifications_delivered >= 1, "seed {seed}: no notification");
        worst = worst.max(latency);
    }
    check!(slowest < Duration::from_secs(10), "slowest run {slowest:?}");
    Ok(format!("5 seeds, max latency {worst} s <= 87000 s, deterministic, slowest run {} ms", slowest.as_millis()))
}

fn c3_preexisting_orderings() -> Verdict {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let (mut rejected, mut accepted) = (0, 0);
    for i in 0..20 {
        let mmd = [600, 3_600, 86_400][rng.gen_range(0..3)];
        let spec = ScenarioSpec {
            name: ScenarioName::PreexistingCert,
            mmd,
            monitor_lag: rng.gen_range(0..=300),
            poll_interval: rng.gen_range(60..=600),
            seed: rng.gen(),
            step: 60,
        };
        let mut w = World::new(spec);
        let issue_at = EPOCH + rng.gen_range(0..=2 * mmd);
        let register_at = EPOCH + rng.gen_range(0..=2 * mmd);
        let code = w.publish_code("v1", "hello");
        let domain = w.domain();
        let mut outcome = None;
        let mut expected = None;
        let mut steps = [(issue_at, 0), (register_at, 1)];
        steps.sort();
        for (at, what) in steps {
            w.advance_to(at);
            if what == 0 {
                w.adversary_issue();
            } else {
                expected = Some(!w.ct.monitor().query(&domain, w.now()).is_empty());
                outcome = Some(w.provision("v1", &code));
            }
        }
        let expected = expected.unwrap();
        let got = match outcome.unwrap() {
            Err(rawebs_ta_agent::TaError::ProvisioningRejected(r)) if r.code == "preexisting_certificate" => true,
            Ok(_) => false,
            Err(e) => return Err(format!("ordering {i}: unexpected error {e}")),
        };
        check!(got == expected, "ordering {i}: rejected={got} but monitor non-empty={expected}");
        if got {
            rejected += 1;
        } else {
            accepted += 1;
        }
    }
    check!(rejected > 0 && accepted > 0, "orderings did not exercise both branches");
    Ok(format!("20 orderings: {rejected} rejected (monitor non-empty), {accepted} accepted (monitor empty)"))
}

fn tamper(ev: &Evidence, rng: &mut ChaCha20Rng) -> (Evidence, &'static str) {
    let mut t = ev.clone();
    let field = match rng.gen_range(0..5) {
        0 => {
            let i = rng.gen_range(0..32);
            t.rv.0[i] ^= 1 << rng.gen_range(0..8);
            "rv"
        }
        1 => {
            let i = rng.gen_range(0..32);
            t.pk_digest[i] ^= 1 << rng.gen_range(0..8);
            "pk_digest"
        }
        2 => {
            let mut bytes = t.tee_id.into_bytes();
            let i = rng.gen_range(0..bytes.len());
            bytes[i] = if bytes[i] == b'x' { b'y' } else { b'x' };
            t.tee_id = String::from_utf8(bytes).unwrap();
            "tee_id"
        }
        3 => {
            t.issued_at = t.issued_at.wrapping_add(rng.gen_range(1..=u64::MAX / 2));
            "issued_at"
        }
        _ => {
            let i = rng.gen_range(0..t.signature.len());
            t.signature[i] ^= 1 << rng.gen_range(0..8);
            "signature"
        }
    };
    (t, field)
}

fn c4_evidence_binding() -> Verdict {
    let tee = TeeRoot::new(seeded_keypair(1_000), "sim-tee");
    let anchors = TrustAnchors::new().with_root("sim-tee", tee.public_key().clone());
    let keys: Vec<KeyPair> = (0..3).map(|i| seeded_keypair(1_002 + i)).collect();
    let clock = Clock::simulated(EPOCH);
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let mut fields = std::collections::BTreeMap::new();
    for i in 0..100 {
        let mut rv = [0u8; 32];
        rng.fill(&mut rv);
        let rv = ReferenceValue(rv);
        let key = &keys[i % keys.len()];
        let ev = generate_evidence(&tee, rv, key.public(), &clock).map_err(|e| e.to_string())?;
        let round_tripped = Evidence::from_bytes(&ev.to_bytes()).map_err(|e| e.to_string())?;
        check!(round_tripped == ev, "case {i}: serialization round trip changed evidence");
        check!(anchors.verify(&round_tripped, &rv, key.public(), clock.now()).accepted(), "case {i}: untampered rejected");

        let (bad, field) = tamper(&ev, &mut rng);
        *fields.entry(field).or_insert(0) += 1;
        let via_anchors = anchors.verify(&bad, &rv, key.public(), clock.now());
        let via_root = verify_evidence(&bad, &rv, key.public(), tee.public_key());
        check!(!via_anchors.accepted() && !via_root.accepted(), "case {i}: tampered {field} accepted");
        clock.advance(1).unwrap();
    }
    Ok(format!("100 untampered accepted, 100 tampered rejected {fields:?}"))
}

fn oracle_leaf(bytes: &[u8]) -> Hash {
    let mut h = Sha256::new();
    h.update([0u8]);
    h.update(bytes);
    h.finalize().into()
}

/// Merkle tree hash computed from scratch by the textbook recursion.
fn oracle_root(leaves: &[Hash]) -> Hash {
    match leaves.len() {
        0 => Sha256::digest([]).into(),
        1 => leaves[0],
        n => {
            let k = 1usize << (usize::BITS - 1 - (n - 1).leading_zeros());
            let mut h = Sha256::new();
            h.update([1u8]);
            h.update(oracle_root(&leaves[..k]));
            h.update(oracle_root(&leaves[k..]));
            h.finalize().into()
        }
    }
}

fn c5_ct_log() -> Verdict {
    let started = Instant::now();
    let empty = CtLog::new(seeded_keypair(1_001), LogConfig { log_id: None, mmd: 0, delay: DelayPolicy::Zero })
        .map_err(|e| e.to_string())?;
    let clock = Clock::simulated(EPOCH);
    let sth = empty.sth(&clock).map_err(|e| e.to_string())?;
    check!(
        hex::encode(sth.root_hash) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855",
        "empty root {}",
        hex::encode(sth.root_hash)
    );

    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let mut sizes = vec![1_000usize];
    sizes.extend((0..3).map(|_| rng.gen_range(1..=400)));
    let ca = CertificateAuthority::new("acceptance-ca");
    let keys: Vec<KeyPair> = (0..3).map(|i| seeded_keypair(1_002 + i)).collect();
    let (mut inclusion, mut consistency) = (0u64, 0u64);
    for &size in &sizes {
        let log = CtLog::new(seeded_keypair(1_001), LogConfig { log_id: None, mmd: 0, delay: DelayPolicy::Zero })
            .map_err(|e| e.to_string())?;
        let mut leaves = Vec::with_capacity(size);
        for _ in 0..size {
            let domain = Domain::canonicalize(&format!("d{}.example", rng.gen_range(0..50))).unwrap();
            let pre = ca.issue_precertificate(&domain, keys[rng.gen_range(0..keys.len())].public(), &clock);
            leaves.push(oracle_leaf(&pre.to_bytes()));
            log.append(pre, &clock).map_err(|e| e.to_string())?;
            clock.advance(rng.gen_range(0..3)).unwrap();
        }
        let roots: Vec<Hash> = (0..=size).map(|n| oracle_root(&leaves[..n])).collect();
        check!(log.sth(&clock).map_err(|e| e.to_string())?.root_hash == roots[size], "STH root differs from oracle");
        for n in 1..=size as u64 {
            for i in 0..n {
                let proof = log.inclusion_proof(i, n, &clock).map_err(|e| e.to_string())?;
                check!(
                    verify_inclusion(i, n, &leaves[i as usize], &proof, &roots[n as usize]),
                    "inclusion {i} in {n} failed"
                );
                inclusion += 1;
            }
            for m in 1..n {
                let proof = log.consistency_proof(m, n, &clock).map_err(|e| e.to_string())?;
                check!(
                    verify_consistency(m, n, &roots[m as usize], &roots[n as usize], &proof),
                    "consistency {m} -> {n} failed"
                );
                consistency += 1;
            }
        }
        // A corrupted proof or a wrong root must not verify.
        if size > 2 {
            let n = size as u64;
            let mut proof = log.inclusion_proof(1, n, &clock).map_err(|e| e.to_string())?;
            proof[0][0] ^= 1;
            check!(!verify_inclusion(1, n, &leaves[1], &proof, &roots[size]), "corrupted inclusion proof verified");
            let proof = log.consistency_proof(1, n, &clock).map_err(|e| e.to_string())?;
            check!(!verify_consistency(1, n, &roots[2], &roots[size], &proof), "wrong old root verified");
        }
        check!(
            matches!(log.inclusion_proof(0, size as u64 + 1, &clock), Err(CtError::OutOfRange)),
            "proof beyond tree size was served"
        );
    }
    let elapsed = started.elapsed();
    check!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!(
        "sizes {sizes:?}: {inclusion} inclusion and {consistency} consistency proofs match the oracle, empty root ok, {} ms",
        elapsed.as_millis()
    ))
}

fn c6_status_scaling() -> Verdict {
    let tee = TeeRoot::new(seeded_keypair(1_000), "sim-tee");
    let key = seeded_keypair(1_002);
    let clock = Clock::simulated(EPOCH);
    let store = Store::open_in_memory().map_err(|e| e.to_string())?;
    let service = store.insert_service("bench", "bench-token").map_err(|e| e.to_string())?.id;
    let rv = ReferenceValue([7; 32]);
    let quote = generate_evidence(&tee, rv, key.public(), &clock).map_err(|e| e.to_string())?.to_base64();
    let counts = [1usize, 10, 100, 1_000];
    for &count in &counts {
        let domain = Domain::canonicalize(&format!("records{count}.example")).unwrap();
        for i in 0..count {
            store
                .register_ta(NewRegistration {
                    service,
                    repository: "https://git.example.org/shop/ta",
                    commit_id: &format!("{i:040x}"),
                    unique_id: rv,
                    domain: &domain,
                    public_key: key.public().der(),
                    quote: &quote,
                    created_at: EPOCH + i as u64,
                })
                .map_err(|e| e.to_string())?;
        }
    }
    let verifier = Arc::new(Verifier::new(Components {
        store,
        anchors: TrustAnchors::new(),
        fetcher: Arc::new(MemoryFetcher::new()),
        monitor: Arc::new(Feed::default()),
        push: Arc::new(RecordingTransport::new()),
        push_keys: PushKeys::from_secret_bytes(&[5; 32]).unwrap(),
        admin_credential: "acceptance-admin-credential".into(),
        clock,
        provision_cap: None,
    }));
    let app = router(ApiState { verifier, assets_dir: None, public_host: None });
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap();
    let mut samples: Vec<Vec<Duration>> = vec![Vec::new(); counts.len()];
    rt.block_on(async {
        for round in 0..301 {
            for (slot, &count) in counts.iter().enumerate() {
                if count == 1_000 && round % 3 != 0 {
                    continue;
                }
                let req = Request::get(format!("/api/ta/records{count}.example")).body(Body::empty()).unwrap();
                let started = Instant::now();
                let resp = app.clone().oneshot(req).await.unwrap();
                let status = resp.status();
                let body = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
                let elapsed = started.elapsed();
                assert_eq!(status, StatusCode::OK);
                let v: serde_json::Value = serde_json::from_slice(&body).unwrap();
                assert_eq!(v["history"].as_array().unwrap().len(), count);
                if round > 0 {
                    samples[slot].push(elapsed);
                }
            }
        }
    });
    let medians: Vec<Duration> = samples
        .iter_mut()
        .map(|s| {
            s.sort();
            s[s.len() / 2]
        })
        .collect();
    let shown: Vec<String> = counts.iter().zip(&medians).map(|(c, m)| format!("{c}: {:.3} ms", m.as_secs_f64() * 1e3)).collect();
    check!(medians.windows(2).all(|w| w[0] <= w[1]), "medians not non-decreasing: {shown:?}");
    check!(medians[3] < Duration::from_millis(200), "1000-record median {:?}", medians[3]);
    Ok(format!("median latency {}", shown.join(", ")))
}

fn c7_storage() -> Verdict {
    let mut w = World::new(ScenarioSpec::new(ScenarioName::HappyPath));
    let code = w.publish_code("v1", "hello");
    w.provision("v1", &code).map_err(|e| e.to_string())?;
    let server = w.verifier.store().latest_server(&w.domain()).unwrap().unwrap();
    let ta_code = w.verifier.store().code(server.code).unwrap().unwrap();
    let pair = server.stored_size() + ta_code.stored_size();
    check!(pair <= 8 * 1024, "TaServer + TaCode = {pair} bytes");

    let mut largest = 0;
    for endpoint in [
        format!("https://fcm.googleapis.com/fcm/send/{}:{}", "c".repeat(22), "A".repeat(140)),
        format!("https://updates.push.services.mozilla.com/wpush/v2/{}", "g".repeat(140)),
        format!("https://push.example.net/{}", "p".repeat(256 - 25)),
    ] {
        let mut point = [0u8; 65];
        point[0] = 4;
        let req = rawebs_verifier::SubscriptionRequest {
            endpoint,
            keys: rawebs_verifier::SubscriptionKeys {
                p256dh: base64_url(&point),
                auth: base64_url(&[1u8; 16]),
            },
        };
        let sub = w.verifier.subscribe(&w.domain(), &req).map_err(|e| e.to_string())?;
        check!(sub.stored_size() <= 400, "subscription {} bytes", sub.stored_size());
        largest = largest.max(sub.stored_size());
    }
    Ok(format!("TaServer+TaCode {pair} B <= 8192 B, largest subscription {largest} B <= 400 B"))
}

fn base64_url(bytes: &[u8]) -> String {
    use base64::Engine;
    base64::engine::general_purpose::URL_SAFE_NO_PAD.encode(bytes)
}

/// A monitor feed with immediate visibility, driven by the test.
#[derive(Default)]
struct Feed(Mutex<Vec<MonitorRecord>>);

impl Feed {
    fn publish(&self, domain: &Domain, key: &KeyPair) {
        let mut records = self.0.lock().unwrap();
        let index = records.len() as u64;
        records.push(MonitorRecord {
            index,
            serial: index + 1,
            domain: domain.clone(),
            public_key: key.public().clone(),
            publish_time: EPOCH,
        });
    }
}

impl MonitorFeed for Feed {
    fn certs_for_domain(&self, domain: &Domain) -> rawebs_ct::Result<Vec<MonitorRecord>> {
        Ok(self.0.lock().unwrap().iter().filter(|r| &r.domain == domain).cloned().collect())
    }

    fn entries_since(&self, start: u64) -> rawebs_ct::Result<Vec<MonitorRecord>> {
        Ok(self.0.lock().unwrap().iter().filter(|r| r.index >= start).cloned().collect())
    }
}

/// Independent model of what the Verifier should conclude.
#[derive(Default)]
struct Model {
    latest: Option<(usize, bool, u32)>,
    confirmed: HashSet<usize>,
    published: Vec<usize>,
    processed: usize,
}

impl Model {
    fn expects_rejection(&self) -> bool {
        self.published.iter().any(|k| !self.confirmed.contains(k))
    }

    fn poll(&mut self) {
        for &key in &self.published[self.processed..] {
            if let Some((latest, active, violations)) = &mut self.latest {
                if key == *latest {
                    *active = true;
                    self.confirmed.insert(key);
                } else {
                    *violations += 1;
                }
            }
        }
        self.processed = self.published.len();
    }

    fn valid(&self) -> bool {
        matches!(self.latest, Some((_, true, 0)))
    }
}

fn c8_gating_property() -> Verdict {
    let tee = TeeRoot::new(seeded_keypair(1_000), "sim-tee");
    // Keys 0 and 1 belong to the TA owner, key 2 to the adversary.
    let keys: Vec<KeyPair> = (0..3).map(|i| seeded_keypair(1_002 + i)).collect();
    let clock = Clock::simulated(EPOCH);
    let fetcher = Arc::new(MemoryFetcher::new());
    let mut evidence = Vec::new();
    for c in 0..3 {
        let bundle = CodeBundle::new("repo").with_file("main.rs", format!("v{c}")).unwrap();
        let rv = compute_reference_value(&bundle);
        fetcher.publish(RepositoryRef::new("repo", format!("c{c}")), bundle);
        let per_key: Vec<Evidence> =
            keys[..2].iter().map(|k| generate_evidence(&tee, rv, k.public(), &clock).unwrap()).collect();
        evidence.push(per_key);
    }
    let domain = Domain::canonicalize("ta.example.com").unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    let (mut checks, mut valid_seen, mut violations_seen, mut rejections) = (0u64, 0u64, 0u64, 0u64);

    for seq in 0..10_000 {
        let feed = Arc::new(Feed::default());
        let verifier = Verifier::new(Components {
            store: Store::open_in_memory().unwrap(),
            anchors: TrustAnchors::new().with_root("sim-tee", tee.public_key().clone()),
            fetcher: fetcher.clone(),
            monitor: feed.clone(),
            push: Arc::new(RecordingTransport::new()),
            push_keys: PushKeys::from_secret_bytes(&[9; 32]).unwrap(),
            admin_credential: "acceptance-admin-credential".into(),
            clock: clock.clone(),
            provision_cap: None,
        });
        let token = verifier.store().insert_service("owner", "owner-token").unwrap().token;
        let mut model = Model::default();
        let len = rng.gen_range(1..=12);
        let mut trace = Vec::new();
        for _ in 0..len {
            let event = rng.gen_range(0..4);
            match event {
                // register, or re-register once a TA exists
                0 | 3 => {
                    let c = rng.gen_range(0..3);
                    let k = rng.gen_range(0..2);
                    let req = ProvisionRequest {
                        repository: "repo".into(),
                        commit_id: format!("c{c}"),
                        domain: domain.clone(),
                        public_key: keys[k].public().clone(),
                        evidence: evidence[c][k].clone(),
                    };
                    let result = verifier.provision_ta(&token, &req);
                    let expect_reject = model.expects_rejection();
                    match (&result, expect_reject) {
                        (Err(VerifierError::PreexistingCertificate { .. }), true) => rejections += 1,
                        (Ok(_), false) => model.latest = Some((k, false, 0)),
                        _ => {
                            return Err(format!(
                                "sequence {seq}: register(c{c}, k{k}) gave {:?}, model expected rejection={expect_reject}; trace {trace:?}",
                                result.map(|p| p.server.id)
                            ))
                        }
                    }
                    trace.push(format!("register(c{c},k{k})"));
                }
                // the TA's own certificate is logged
                1 => {
                    let k = model.latest.map_or(0, |(k, _, _)| k);
                    feed.publish(&domain, &keys[k]);
                    model.published.push(k);
                    trace.push(format!("own(k{k})"));
                }
                // a certificate with the adversary's key is logged
                _ => {
                    feed.publish(&domain, &keys[2]);
                    model.published.push(2);
                    trace.push("foreign".into());
                }
            }
            if rng.gen_bool(0.6) {
                verifier.monitoring_step().unwrap();
                model.poll();
                trace.push("poll".into());
            }

            let status = verifier.get_ta_status(&domain);
            let latest = verifier.store().latest_server(&domain).unwrap();
            match (status, latest) {
                (Err(VerifierError::NotFound), None) => {
                    check!(model.latest.is_none(), "sequence {seq}: model has a TA the store lacks; trace {trace:?}");
                }
                (Ok(status), Some(server)) => {
                    let no_violations = verifier.store().violations_for_server(server.id).unwrap().is_empty();
                    check!(
                        status.valid == (server.is_active && no_violations),
                        "sequence {seq}: valid={} but active={} violations_empty={no_violations}; trace {trace:?}",
                        status.valid,
                        server.is_active
                    );
                    check!(
                        status.valid == model.valid(),
                        "sequence {seq}: valid={} but model says {}; trace {trace:?}",
                        status.valid,
                        model.valid()
                    );
                    valid_seen += status.valid as u64;
                    violations_seen += !no_violations as u64;
                }
                (s, l) => return Err(format!("sequence {seq}: status {:?} vs latest {:?}", s.map(|s| s.valid), l.map(|l| l.id))),
            }
            checks += 1;
        }
    }
    check!(valid_seen > 0 && violations_seen > 0 && rejections > 0, "event mix too narrow");
    Ok(format!(
        "10000 sequences, {checks} status checks ({valid_seen} valid, {violations_seen} with violations, {rejections} rejected registrations)"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 end-to-end happy path", c1_happy_path),
        ("2 domain impersonation detection bound", c2_impersonation_bound),
        ("3 pre-existing certificate rejection", c3_preexisting_orderings),
        ("4 evidence binding", c4_evidence_binding),
        ("5 CT log proofs against brute-force oracle", c5_ct_log),
        ("6 status lookup scaling", c6_status_scaling),
        ("7 storage bounds", c7_storage),
        ("8 status gating property", c8_gating_property),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match result {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(reason) => {
                failed += 1;
                println!("FAIL criterion {name}: {reason}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
