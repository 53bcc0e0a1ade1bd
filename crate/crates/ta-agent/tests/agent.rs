// SPDX-License-Identifier: Apache-2.0

use std::net::SocketAddr;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use rand::rngs::StdRng;
use rand::SeedableRng;
use rawebs_core::{compute_reference_value, seeded_keypair, Clock, CodeBundle, Domain, Evidence, PublicKey, TeeRoot};
use rawebs_ct::{Certificate, CertificateAuthority, CertificateIssuer, CtError, CtLog, CtStack, DelayPolicy, LogConfig};
use rawebs_ta_agent::{
    has_status_link, ta_provision, ta_serve, HttpVerifier, KeyStore, PageOptions, RegistrationReceipt,
    RegistrationRequest, Rejection, TaConfig, TaError, VerifierApi, CERTIFICATE_HEADER,
};

/// Accepts every registration and remembers what it saw.
#[derive(Default)]
struct FakeVerifier {
    seen: Mutex<Vec<RegistrationRequest>>,
    reject: Option<Rejection>,
}

impl VerifierApi for FakeVerifier {
    fn register(&self, _token: &str, req: &RegistrationRequest) -> Result<RegistrationReceipt, Rejection> {
        self.seen.lock().unwrap().push(req.clone());
        match &self.reject {
            Some(r) => Err(r.clone()),
            None => Ok(RegistrationReceipt { id: 1, domain: req.domain.clone(), rv: String::new() }),
        }
    }
}

struct CountingIssuer {
    inner: CtStack,
    calls: AtomicUsize,
    fail: bool,
}

impl CertificateIssuer for CountingIssuer {
    fn issue(&self, domain: &Domain, pk: &PublicKey) -> rawebs_ct::Result<Certificate> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        if self.fail {
            return Err(CtError::Unavailable("ca down".into()));
        }
        self.inner.issue(domain, pk)
    }
}

fn issuer(fail: bool) -> CountingIssuer {
    let log = CtLog::new(seeded_keypair(301), LogConfig { log_id: None, mmd: 60, delay: DelayPolicy::Zero }).unwrap();
    CountingIssuer {
        inner: CtStack::new(CertificateAuthority::new("ca"), log, 0, Clock::simulated(0)),
        calls: AtomicUsize::new(0),
        fail,
    }
}

fn config(code_dir: &Path, state_dir: &Path) -> TaConfig {
    std::fs::write(code_dir.join("main.rs"), "fn main() {}\n").unwrap();
    TaConfig::from_toml(&format!(
        "domain = \"ta.example.com\"\nverifier_url = \"http://verifier.example:8480\"\n\
         ca_url = \"http://127.0.0.1:1\"\nservice_token = \"tok\"\nrepository = \"repo\"\ncommit_id = \"c1\"\n\
         code_dir = \"{}\"\nstate_dir = \"{}\"\nlisten = \"127.0.0.1:0\"\n",
        code_dir.display(),
        state_dir.display()
    ))
    .unwrap()
}

fn tee() -> TeeRoot {
    TeeRoot::new(seeded_keypair(300), "mock-tee")
}

#[test]
fn provisioning_binds_one_key_everywhere() {
    let code = tempfile::tempdir().unwrap();
    let state = tempfile::tempdir().unwrap();
    let cfg = config(code.path(), state.path());
    let verifier = FakeVerifier::default();
    let ca = issuer(false);
    let keys = KeyStore::dir(state.path());
    let mut rng = StdRng::seed_from_u64(1);

    let (key, cert) = ta_provision(&cfg, &tee(), &Clock::simulated(5), &keys, &verifier, &ca, &mut rng).unwrap();
    assert_eq!(&cert.body.public_key, key.public());
    assert_eq!(cert.body.domain.as_str(), "ta.example.com");

    let seen = verifier.seen.lock().unwrap()[0].clone();
    assert_eq!(STANDARD.decode(&seen.public_key).unwrap(), key.public().der());
    let ev = Evidence::from_base64(&seen.evidence).unwrap();
    let bundle = CodeBundle::from_dir(code.path(), "repo@c1").unwrap();
    assert_eq!(ev.rv, compute_reference_value(&bundle));
    assert_eq!(ev.pk_digest, key.public().digest());
    assert!(tee().public_key().verify(&ev.payload(), &ev.signature));

    let stored = keys.load_certificate().unwrap().unwrap();
    assert_eq!(stored, cert);

    // A second run reuses the persisted key.
    let (again, _) = ta_provision(&cfg, &tee(), &Clock::simulated(6), &keys, &verifier, &ca, &mut rng).unwrap();
    assert_eq!(again.public(), key.public());
    let seen = verifier.seen.lock().unwrap();
    assert_eq!(seen[0].public_key, seen[1].public_key);
}

#[test]
fn rejection_stops_before_the_ca() {
    let code = tempfile::tempdir().unwrap();
    let cfg = config(code.path(), code.path());
    let verifier = FakeVerifier {
        reject: Some(Rejection { status: 409, code: "preexisting_certificate".into(), message: "taken".into() }),
        ..Default::default()
    };
    let ca = issuer(false);
    let keys = KeyStore::with_key(seeded_keypair(302));
    let err = ta_provision(&cfg, &tee(), &Clock::simulated(0), &keys, &verifier, &ca, &mut StdRng::seed_from_u64(2))
        .unwrap_err();
    match err {
        TaError::ProvisioningRejected(r) => assert_eq!(r.code, "preexisting_certificate"),
        other => panic!("unexpected {other}"),
    }
    assert_eq!(ca.calls.load(Ordering::SeqCst), 0);
    assert!(keys.load_certificate().unwrap().is_none());
}

#[test]
fn ca_failure_is_reported() {
    let code = tempfile::tempdir().unwrap();
    let cfg = config(code.path(), code.path());
    let keys = KeyStore::with_key(seeded_keypair(302));
    let err = ta_provision(
        &cfg,
        &tee(),
        &Clock::simulated(0),
        &keys,
        &FakeVerifier::default(),
        &issuer(true),
        &mut StdRng::seed_from_u64(3),
    )
    .unwrap_err();
    assert!(matches!(err, TaError::CaFailure(_)));
}

fn serve_router(app: Router) -> SocketAddr {
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            axum::serve(listener, app).await.unwrap();
        });
    });
    rx.recv().unwrap()
}

#[test]
fn http_verifier_parses_receipts_and_rejections() {
    let calls = Arc::new(Mutex::new(Vec::new()));
    let sink = calls.clone();
    let app = Router::new().route(
        "/api/ta",
        post(move |headers: axum::http::HeaderMap, Json(body): Json<serde_json::Value>| {
            let sink = sink.clone();
            async move {
                sink.lock().unwrap().push(headers["authorization"].to_str().unwrap().to_owned());
                if body["domain"] == "taken.example" {
                    (
                        StatusCode::CONFLICT,
                        Json(serde_json::json!({"error": "preexisting_certificate", "message": "no"})),
                    )
                } else {
                    (StatusCode::CREATED, Json(serde_json::json!({"id": 4, "domain": body["domain"], "rv": "ab"})))
                }
            }
        }),
    );
    let client = HttpVerifier::new(format!("http://{}/", serve_router(app)));
    let mut req = RegistrationRequest {
        repository: "r".into(),
        commit_id: "c".into(),
        domain: "ok.example".into(),
        public_key: String::new(),
        evidence: String::new(),
    };
    let receipt = client.register("tok", &req).unwrap();
    assert_eq!(receipt.id, 4);
    req.domain = "taken.example".into();
    let rejection = client.register("tok", &req).unwrap_err();
    assert_eq!((rejection.status, rejection.code.as_str()), (409, "preexisting_certificate"));
    assert_eq!(calls.lock().unwrap()[0], "Bearer tok");

    let down = HttpVerifier::new("http://127.0.0.1:1").register("tok", &req).unwrap_err();
    assert_eq!(down.code, "unreachable");
}

#[tokio::test]
async fn served_page_links_status_and_carries_certificate() {
    let ca = issuer(false);
    let key = seeded_keypair(302);
    let domain = Domain::canonicalize("ta.example.com").unwrap();
    let cert = ca.issue(&domain, key.public()).unwrap();
    let status_url = "http://verifier.example:8480/app/verification-status".to_owned();

    let honest = ta_serve("127.0.0.1:0", PageOptions { status_url: status_url.clone(), include_status_link: true }, &cert)
        .await
        .unwrap();
    let evasive = ta_serve("127.0.0.1:0", PageOptions { status_url: status_url.clone(), include_status_link: false }, &cert)
        .await
        .unwrap();
    let fetch = |addr: SocketAddr| {
        tokio::task::spawn_blocking(move || {
            let resp = ureq::get(&format!("http://{addr}/")).call().unwrap();
            let policy = resp.header("referrer-policy").map(str::to_owned);
            let cert = resp.header(CERTIFICATE_HEADER).map(str::to_owned);
            (policy, cert, resp.into_string().unwrap())
        })
    };
    let (policy, cert_b64, body) = fetch(honest.addr).await.unwrap();
    assert!(body.contains("hello"));
    assert!(has_status_link(&body, &status_url));
    assert!(body.contains("window.open("));
    assert_eq!(policy.as_deref(), Some("origin"));

    let served = Certificate::from_bytes(&STANDARD.decode(cert_b64.unwrap()).unwrap()).unwrap();
    assert_eq!(&served.body.public_key, key.public());
    assert!(served.embedded_scts.iter().all(|s| s.verify(ca.inner.log().public_key())));

    let (_, _, body) = fetch(evasive.addr).await.unwrap();
    assert!(body.contains("hello"));
    assert!(!has_status_link(&body, &status_url));

    honest.stop().await;
    evasive.stop().await;

    let taken = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = taken.local_addr().unwrap().to_string();
    let err = ta_serve(&addr, PageOptions { status_url, include_status_link: true }, &cert).await;
    assert!(matches!(err, Err(TaError::BindFailure { .. })));
}
