// SPDX-License-Identifier: Apache-2.0

//! The example TA web server. TLS is not terminated here; every response
//! carries the TA certificate so clients can check the key binding.

use std::net::SocketAddr;

use axum::http::{header, HeaderName, HeaderValue};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use rawebs_ct::Certificate;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

use crate::config::TaConfig;
use crate::{Result, TaError};

/// Base64 of the TA certificate bytes.
pub const CERTIFICATE_HEADER: &str = "x-ta-certificate";
const STATUS_LINK_ID: &str = "verification-status";

#[derive(Debug, Clone)]
pub struct PageOptions {
    pub status_url: String,
    /// A malicious TA would drop the status link to avoid scrutiny.
    pub include_status_link: bool,
}

impl PageOptions {
    pub fn for_config(config: &TaConfig) -> Self {
        Self { status_url: config.status_url(), include_status_link: true }
    }
}

/// HTML of the TA landing page.
pub fn render_page(opts: &PageOptions) -> String {
    let link = if opts.include_status_link {
        format!(
            "<p><a id=\"{STATUS_LINK_ID}\" href=\"{url}\" target=\"rawebs-status\" \
             onclick=\"window.open(this.href, 'rawebs-status', 'popup,width=640,height=720'); return false;\">\
             Check this server's verification status</a></p>",
            url = opts.status_url
        )
    } else {
        String::new()
    };
    format!("<!doctype html><html><head><meta charset=\"utf-8\"><title>TA</title></head><body><p>hello</p>{link}</body></html>")
}

/// True when `html` links to `status_url` through the status control.
pub fn has_status_link(html: &str, status_url: &str) -> bool {
    html.contains(&format!("id=\"{STATUS_LINK_ID}\"")) && html.contains(&format!("href=\"{status_url}\""))
}

pub fn page_router(opts: PageOptions, cert: &Certificate) -> Router {
    let body = render_page(&opts);
    let cert_header = HeaderValue::from_str(&STANDARD.encode(cert.to_bytes())).expect("base64 is a valid header");
    Router::new().route(
        "/",
        get(move || {
            let body = body.clone();
            let cert_header = cert_header.clone();
            async move {
                let mut resp: Response = Html(body).into_response();
                let h = resp.headers_mut();
                // The Verifier learns which TA referred the user from the Referer.
                h.insert(header::REFERRER_POLICY, HeaderValue::from_static("origin"));
                h.insert(HeaderName::from_static(CERTIFICATE_HEADER), cert_header);
                resp
            }
        }),
    )
}

pub struct ServerHandle {
    pub addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    task: JoinHandle<()>,
}

impl ServerHandle {
    pub async fn stop(mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        let _ = self.task.await;
    }

    /// Waits until the server exits on its own.
    pub async fn wait(self) {
        let _ = self.task.await;
    }
}

/// Binds `listen` and serves the TA page on the current runtime.
pub async fn ta_serve(listen: &str, opts: PageOptions, cert: &Certificate) -> Result<ServerHandle> {
    let listener = tokio::net::TcpListener::bind(listen)
        .await
        .map_err(|e| TaError::BindFailure { addr: listen.into(), reason: e.to_string() })?;
    let addr = listener.local_addr()?;
    let app = page_router(opts, cert);
    let (tx, rx) = oneshot::channel::<()>();
    let task = tokio::spawn(async move {
        let shutdown = async {
            let _ = rx.await;
        };
        if let Err(e) = axum::serve(listener, app).with_graceful_shutdown(shutdown).await {
            tracing::error!(error = %e, "TA server failed");
        }
    });
    Ok(ServerHandle { addr, shutdown: Some(tx), task })
}
