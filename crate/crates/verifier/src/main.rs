// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use anyhow::Context;
use clap::{Parser, Subcommand};
use rawebs_core::{Clock, FreshnessPolicy, LocalFetcher, TrustAnchors};
use rawebs_ct::HttpCt;
use rawebs_verifier::{
    router, worker, ApiState, Components, HttpPushTransport, PushKeys, Store, Verifier, VerifierConfig,
};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "rawebs-verifier", about = "RA-WEBs Verifier service")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP API and the CT monitoring worker.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Print a fresh push signing secret for `push_secret_key`.
    GenPushKey,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .init();
    match Cli::parse().command {
        Command::GenPushKey => {
            let keys = PushKeys::generate();
            println!("push_secret_key = \"{}\"", keys.secret_base64());
            println!("# public key: {}", keys.public_key_base64());
            Ok(())
        }
        Command::Serve { config } => serve(VerifierConfig::load(config.as_deref())?).await,
    }
}

async fn serve(config: VerifierConfig) -> anyhow::Result<()> {
    let root = config
        .read_tee_root()?
        .context("tee_root_public_key must point at the TEE root public key")?;
    let mut anchors = TrustAnchors::new().with_root(config.tee_id.clone(), root);
    if let Some(age) = config.evidence_max_age {
        anchors = anchors.with_freshness(FreshnessPolicy::MaxAge(age));
    }
    let push_keys = match &config.push_secret_key {
        Some(secret) => PushKeys::from_base64(secret).map_err(anyhow::Error::msg)?,
        None => {
            tracing::warn!("no push_secret_key configured; using an ephemeral key");
            PushKeys::generate()
        }
    };
    let store = Store::open(&config.store_path)
        .with_context(|| format!("opening store {}", config.store_path.display()))?;
    let verifier = Arc::new(Verifier::new(Components {
        store,
        anchors,
        fetcher: Arc::new(LocalFetcher),
        monitor: Arc::new(HttpCt::new(config.ct_url.clone())),
        push: Arc::new(HttpPushTransport::new()),
        push_keys,
        admin_credential: config.admin_credential.clone(),
        clock: Clock::real(),
        provision_cap: config.provision_cap,
    }));

    let monitor = worker::spawn_monitor(verifier.clone(), Duration::from_secs(config.poll_interval));
    let app = router(ApiState {
        verifier,
        assets_dir: config.assets_dir.clone(),
        public_host: config.public_host.clone(),
    });
    let listener = tokio::net::TcpListener::bind(&config.listen)
        .await
        .with_context(|| format!("binding {}", config.listen))?;
    tracing::info!(addr = %listener.local_addr()?, "verifier listening");
    axum::serve(listener, app).with_graceful_shutdown(async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await?;
    monitor.abort();
    Ok(())
}
