// SPDX-License-Identifier: Apache-2.0

//! HTTP interface of the Verifier.

use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use rawebs_core::{Domain, Evidence, PublicKey};
use serde::Deserialize;
use serde_json::json;
use tower_http::services::ServeDir;

use crate::error::VerifierError;
use crate::verifier::{ProvisionRequest, SubscriptionRequest, TaState, TaStatus, Verifier};

/// Cookie remembering which TA referred the user to the status page, so the
/// page's own API calls (whose Referer is the Verifier) can be attributed.
pub const TA_COOKIE: &str = "rawebs_ta";
pub const STATUS_PAGE_FILE: &str = "app/verification-status.html";
const SERVICE_WORKER: &str = include_str!("../assets/static/js/sw/service-worker.js");

#[derive(Clone)]
pub struct ApiState {
    pub verifier: Arc<Verifier>,
    pub assets_dir: Option<PathBuf>,
    pub public_host: Option<String>,
}

impl IntoResponse for VerifierError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.http_status()).expect("valid status code");
        let mut body = json!({ "error": self.code(), "message": self.to_string() });
        match &self {
            Self::EvidenceRejected(reason) => body["reason"] = json!(reason),
            Self::PreexistingCertificate { log_indices } => body["log_indices"] = json!(log_indices),
            Self::Store(e) => tracing::error!(error = %e, "store failure"),
            _ => {}
        }
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, VerifierError>;

fn bad_json(e: JsonRejection) -> VerifierError {
    VerifierError::BadRequest(e.body_text())
}

fn bearer(headers: &HeaderMap) -> ApiResult<String> {
    headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .map(|t| t.trim().to_owned())
        .ok_or(VerifierError::Unauthorized)
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.expect("verifier task panicked")
}

fn parse_domain(raw: &str) -> ApiResult<Domain> {
    Domain::canonicalize(raw).map_err(|e| VerifierError::BadRequest(e.to_string()))
}

/// Host part of a Host header, without port.
fn host_only(value: &str) -> &str {
    match value.strip_prefix('[') {
        Some(rest) => rest.split(']').next().unwrap_or(rest),
        None => value.split(':').next().unwrap_or(value),
    }
}

impl ApiState {
    fn own_host(&self, headers: &HeaderMap) -> Option<String> {
        self.public_host.clone().or_else(|| {
            headers
                .get(header::HOST)
                .and_then(|v| v.to_str().ok())
                .map(|h| host_only(h).to_ascii_lowercase())
        })
    }

    /// The TA domain named by the Referer header, unless the Referer is the
    /// Verifier itself.
    pub fn referer_domain(&self, headers: &HeaderMap) -> Option<Domain> {
        let referer = headers.get(header::REFERER)?.to_str().ok()?;
        let url = url::Url::parse(referer).ok()?;
        if !matches!(url.scheme(), "http" | "https") {
            return None;
        }
        let host = url.host_str()?;
        if self.own_host(headers).as_deref() == Some(&host.to_ascii_lowercase()) {
            return None;
        }
        Domain::canonicalize(host).ok()
    }
}

fn cookie_domain(headers: &HeaderMap) -> Option<Domain> {
    headers
        .get_all(header::COOKIE)
        .iter()
        .filter_map(|v| v.to_str().ok())
        .flat_map(|v| v.split(';'))
        .filter_map(|pair| pair.trim().split_once('='))
        .find(|(k, _)| *k == TA_COOKIE)
        .and_then(|(_, v)| Domain::canonicalize(v).ok())
}

#[derive(Deserialize)]
struct ServiceBody {
    #[serde(default)]
    name: String,
}

async fn create_service(
    State(state): State<ApiState>,
    headers: HeaderMap,
    body: Result<Json<ServiceBody>, JsonRejection>,
) -> ApiResult<Response> {
    let credential = bearer(&headers)?;
    let Json(body) = body.map_err(bad_json)?;
    let v = state.verifier.clone();
    let account = blocking(move || v.register_service(&credential, &body.name)).await?;
    Ok((
        StatusCode::CREATED,
        Json(json!({ "id": account.id, "name": account.name, "token": account.token })),
    )
        .into_response())
}

#[derive(Deserialize)]
struct ProvisionBody {
    repository: String,
    commit_id: String,
    domain: String,
    public_key: String,
    evidence: String,
}

impl ProvisionBody {
    fn into_request(self) -> ApiResult<ProvisionRequest> {
        let der = STANDARD
            .decode(self.public_key.trim())
            .map_err(|_| VerifierError::BadRequest("public_key is not base64".into()))?;
        let public_key = PublicKey::from_der(&der).map_err(|e| VerifierError::BadRequest(e.to_string()))?;
        let evidence =
            Evidence::from_base64(self.evidence.trim()).map_err(|e| VerifierError::BadRequest(e.to_string()))?;
        Ok(ProvisionRequest {
            repository: self.repository,
            commit_id: self.commit_id,
            domain: parse_domain(&self.domain)?,
            public_key,
            evidence,
        })
    }
}

async fn provision(
    State(state): State<ApiState>,
    headers: HeaderMap,
    body: Result<Json<ProvisionBody>, JsonRejection>,
) -> ApiResult<Response> {
    let token = bearer(&headers)?;
    let Json(body) = body.map_err(bad_json)?;
    let req = body.into_request()?;
    let v = state.verifier.clone();
    let done = blocking(move || v.provision_ta(&token, &req)).await?;
    Ok((
        StatusCode::CREATED,
        Json(json!({
            "id": done.server.id,
            "domain": done.server.domain,
            "rv": done.code.unique_id,
            "repository": done.code.repository,
            "commit_id": done.code.commit_id,
            "is_active": done.server.is_active,
            "created_at": done.server.created_at,
            "superseded": done.superseded,
            "reregistration_notifications": done.reregistration,
        })),
    )
        .into_response())
}

async fn ta_status(State(state): State<ApiState>, Path(domain): Path<String>) -> ApiResult<Json<TaStatus>> {
    let domain = Domain::canonicalize(&domain).map_err(|_| VerifierError::NotFound)?;
    let v = state.verifier.clone();
    Ok(Json(blocking(move || v.get_ta_status(&domain)).await?))
}

async fn subscription_config(State(state): State<ApiState>) -> Json<serde_json::Value> {
    Json(json!({ "public_key": state.verifier.subscription_public_key() }))
}

async fn subscribe(
    State(state): State<ApiState>,
    headers: HeaderMap,
    body: Result<Json<SubscriptionRequest>, JsonRejection>,
) -> ApiResult<Response> {
    let domain = state
        .referer_domain(&headers)
        .or_else(|| cookie_domain(&headers))
        .ok_or_else(|| VerifierError::BadRequest("cannot determine TA domain".into()))?;
    let Json(body) = body.map_err(|e| match e {
        JsonRejection::JsonDataError(_) => VerifierError::MalformedSubscription("missing or invalid fields"),
        other => bad_json(other),
    })?;
    let v = state.verifier.clone();
    let sub = blocking(move || v.subscribe(&domain, &body)).await?;
    Ok((StatusCode::CREATED, Json(json!({ "id": sub.id, "server": sub.server }))).into_response())
}

#[derive(Deserialize)]
struct NotifyBody {
    message: String,
}

async fn notify(
    State(state): State<ApiState>,
    headers: HeaderMap,
    body: Result<Json<NotifyBody>, JsonRejection>,
) -> ApiResult<Response> {
    let credential = bearer(&headers)?;
    let Json(body) = body.map_err(bad_json)?;
    let v = state.verifier.clone();
    let report = blocking(move || v.notify_broadcast(&credential, &body.message)).await?;
    Ok(Json(report).into_response())
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

fn fallback_page(domain: Option<&Domain>, status: Option<Result<TaStatus, VerifierError>>) -> String {
    let body = match (domain, status) {
        (None, _) => "<p class=\"error\" id=\"verdict\">Error: cannot determine TA domain. \
                      Open this page from the TA's status link.</p>"
            .to_owned(),
        (Some(d), Some(Ok(s))) => {
            let verdict = match s.state {
                TaState::Valid => "valid",
                TaState::Pending => "pending CT confirmation",
                TaState::Violated => "invalid",
            };
            let mut rows = String::new();
            for v in &s.violations {
                rows.push_str(&format!(
                    "<tr><td>{}</td><td>{}</td><td>{}</td></tr>",
                    v.id, v.created_at, v.offending_log_index
                ));
            }
            format!(
                "<h1 id=\"domain\">{domain}</h1>\
                 <p id=\"verdict\" data-valid=\"{valid}\">Verdict: {verdict}</p>\
                 <dl><dt>Reference value</dt><dd id=\"rv\">{rv}</dd>\
                 <dt>Repository</dt><dd id=\"repository\">{repo}</dd>\
                 <dt>Commit</dt><dd id=\"commit\">{commit}</dd>\
                 <dt>Registered at</dt><dd>{at}</dd></dl>\
                 <table id=\"violations\"><tr><th>id</th><th>created_at</th><th>log index</th></tr>{rows}</table>",
                domain = escape(d.as_str()),
                valid = s.valid,
                rv = s.rv,
                repo = escape(&s.repository),
                commit = escape(&s.commit_id),
                at = s.registered_at,
            )
        }
        (Some(d), Some(Err(VerifierError::NotFound))) => format!(
            "<h1 id=\"domain\">{}</h1><p class=\"error\" id=\"verdict\" data-valid=\"false\">\
             Warning: this TA is not registered with the Verifier.</p>",
            escape(d.as_str())
        ),
        (Some(d), _) => format!(
            "<h1 id=\"domain\">{}</h1><p class=\"error\" id=\"verdict\">Status temporarily unavailable.</p>",
            escape(d.as_str())
        ),
    };
    format!(
        "<!doctype html><html><head><meta charset=\"utf-8\"><title>Verification Status</title></head>\
         <body><p>Check that the address bar shows this Verifier's domain before trusting this page.</p>\
         {body}</body></html>"
    )
}

/// Serves the status page. The TA domain comes only from the Referer; any
/// query string is ignored.
async fn status_page(State(state): State<ApiState>, headers: HeaderMap) -> Response {
    let domain = state.referer_domain(&headers);
    let page = match state.assets_dir.as_ref().map(|d| d.join(STATUS_PAGE_FILE)) {
        Some(path) if path.is_file() => match tokio::fs::read_to_string(&path).await {
            Ok(text) => text,
            Err(e) => {
                tracing::error!(error = %e, "reading status page");
                return StatusCode::INTERNAL_SERVER_ERROR.into_response();
            }
        },
        _ => {
            let status = match &domain {
                Some(d) => {
                    let v = state.verifier.clone();
                    let d = d.clone();
                    Some(blocking(move || v.get_ta_status(&d)).await)
                }
                None => None,
            };
            fallback_page(domain.as_ref(), status)
        }
    };
    let mut response = Html(page).into_response();
    let headers = response.headers_mut();
    headers.insert(header::CACHE_CONTROL, HeaderValue::from_static("no-store"));
    if let Some(d) = domain {
        let cookie = format!("{TA_COOKIE}={}; Path=/api/subscription; HttpOnly; SameSite=Strict", d.as_str());
        headers.insert(header::SET_COOKIE, HeaderValue::from_str(&cookie).expect("domain is a valid header value"));
    }
    response
}

async fn builtin_service_worker() -> Response {
    (
        [
            (header::CONTENT_TYPE, "text/javascript; charset=utf-8"),
            (header::HeaderName::from_static("service-worker-allowed"), "/"),
        ],
        SERVICE_WORKER,
    )
        .into_response()
}

pub fn router(state: ApiState) -> Router {
    let mut app = Router::new()
        .route("/api/service", post(create_service))
        .route("/api/ta", post(provision))
        .route("/api/ta/{domain}", get(ta_status))
        .route("/api/config/subscription", get(subscription_config))
        .route("/api/subscription", post(subscribe))
        .route("/api/notify", post(notify))
        .route("/app/verification-status", get(status_page));
    match &state.assets_dir {
        Some(dir) => app = app.nest_service("/static", ServeDir::new(dir.join("static"))),
        None => {
            app = app
                .route("/static/js/sw/service-worker.js", get(builtin_service_worker))
                .route("/static/js/sw/service-worker", get(builtin_service_worker))
        }
    }
    app.with_state(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn host_only_strips_port() {
        assert_eq!(host_only("verifier.example:8480"), "verifier.example");
        assert_eq!(host_only("verifier.example"), "verifier.example");
        assert_eq!(host_only("[::1]:80"), "::1");
    }

    #[test]
    fn escapes_markup() {
        assert_eq!(escape("<a href='x'>&\""), "&lt;a href=&#39;x&#39;&gt;&amp;&quot;");
    }

    #[test]
    fn cookie_parsing() {
        let mut h = HeaderMap::new();
        h.insert(header::COOKIE, HeaderValue::from_static("a=b; rawebs_ta=TA.Example.com"));
        assert_eq!(cookie_domain(&h).unwrap().as_str(), "ta.example.com");
        h.insert(header::COOKIE, HeaderValue::from_static("rawebs_ta=not a domain"));
        assert!(cookie_domain(&h).is_none());
    }
}
