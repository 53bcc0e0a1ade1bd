// SPDX-License-Identifier: Apache-2.0

//! HTTP front end for a [`CtStack`].

use std::sync::Arc;

use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use rawebs_core::{Domain, PublicKey};
use serde::{Deserialize, Serialize};

use crate::monitor::{format_records, MonitorRecord};
use crate::stack::{CertificateIssuer, CtStack};
use crate::CtError;

#[derive(Debug, Serialize, Deserialize)]
pub struct IssueRequest {
    pub domain: String,
    /// Base64 DER SubjectPublicKeyInfo.
    pub public_key: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SthResponse {
    pub tree_size: u64,
    pub root_hash: String,
    pub timestamp: u64,
    pub signature: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ProofResponse {
    pub proof: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LogKeyResponse {
    pub log_id: String,
    pub public_key: String,
    pub mmd: u64,
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, self.1).into_response()
    }
}

impl From<CtError> for ApiError {
    fn from(e: CtError) -> Self {
        let status = match e {
            CtError::OutOfRange => StatusCode::NOT_FOUND,
            CtError::Unavailable(_) => StatusCode::SERVICE_UNAVAILABLE,
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError(status, e.to_string())
    }
}

fn bad_request(msg: impl ToString) -> ApiError {
    ApiError(StatusCode::BAD_REQUEST, msg.to_string())
}

pub fn router(stack: Arc<CtStack>) -> Router {
    Router::new()
        .route("/ca/issue", post(issue))
        .route("/monitor/certs", get(certs_for_domain))
        .route("/monitor/entries", get(entries_since))
        .route("/ct/sth", get(sth))
        .route("/ct/log-key", get(log_key))
        .route("/ct/proof/inclusion", get(inclusion))
        .route("/ct/proof/consistency", get(consistency))
        .with_state(stack)
}

async fn issue(
    State(stack): State<Arc<CtStack>>,
    Json(req): Json<IssueRequest>,
) -> Result<Response, ApiError> {
    let domain = Domain::canonicalize(&req.domain).map_err(bad_request)?;
    let der = BASE64.decode(req.public_key.trim()).map_err(bad_request)?;
    let pk = PublicKey::from_der(&der).map_err(bad_request)?;
    let cert = stack.issue(&domain, &pk)?;
    tracing::info!(%domain, serial = cert.body.serial, "issued certificate");
    Ok(([(header::CONTENT_TYPE, "application/octet-stream")], cert.to_bytes()).into_response())
}

#[derive(Deserialize)]
struct DomainQuery {
    domain: String,
}

fn text_records(records: &[MonitorRecord]) -> Response {
    ([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], format_records(records)).into_response()
}

async fn certs_for_domain(
    State(stack): State<Arc<CtStack>>,
    Query(q): Query<DomainQuery>,
) -> Result<Response, ApiError> {
    let domain = Domain::canonicalize(&q.domain).map_err(bad_request)?;
    let now = stack.clock().now();
    let records: Vec<_> = stack.monitor().query(&domain, now).iter().map(MonitorRecord::from).collect();
    Ok(text_records(&records))
}

#[derive(Deserialize)]
struct StartQuery {
    #[serde(default)]
    start: u64,
}

async fn entries_since(
    State(stack): State<Arc<CtStack>>,
    Query(q): Query<StartQuery>,
) -> Response {
    let now = stack.clock().now();
    let records: Vec<_> = stack.monitor().entries(q.start, now).iter().map(MonitorRecord::from).collect();
    text_records(&records)
}

async fn sth(State(stack): State<Arc<CtStack>>) -> Result<Json<SthResponse>, ApiError> {
    let sth = stack.log().sth(stack.clock())?;
    Ok(Json(SthResponse {
        tree_size: sth.tree_size,
        root_hash: hex::encode(sth.root_hash),
        timestamp: sth.timestamp,
        signature: BASE64.encode(&sth.signature),
    }))
}

async fn log_key(State(stack): State<Arc<CtStack>>) -> Json<LogKeyResponse> {
    Json(LogKeyResponse {
        log_id: stack.log().log_id().to_owned(),
        public_key: BASE64.encode(stack.log().public_key().der()),
        mmd: stack.log().mmd(),
    })
}

#[derive(Deserialize)]
struct InclusionQuery {
    index: u64,
    tree_size: u64,
}

async fn inclusion(
    State(stack): State<Arc<CtStack>>,
    Query(q): Query<InclusionQuery>,
) -> Result<Json<ProofResponse>, ApiError> {
    let proof = stack.log().inclusion_proof(q.index, q.tree_size, stack.clock())?;
    Ok(Json(ProofResponse { proof: proof.iter().map(hex::encode).collect() }))
}

#[derive(Deserialize)]
struct ConsistencyQuery {
    first: u64,
    second: u64,
}

async fn consistency(
    State(stack): State<Arc<CtStack>>,
    Query(q): Query<ConsistencyQuery>,
) -> Result<Json<ProofResponse>, ApiError> {
    let proof = stack.log().consistency_proof(q.first, q.second, stack.clock())?;
    Ok(Json(ProofResponse { proof: proof.iter().map(hex::encode).collect() }))
}
