// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use anyhow::{bail, Context};
use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use clap::{Parser, Subcommand};
use rand::rngs::OsRng;
use rawebs_core::{Clock, KeyPair, TeeRoot};
use rawebs_ct::HttpCt;
use rawebs_ta_agent::{ta_provision, ta_serve, HttpVerifier, KeyStore, PageOptions, TaConfig};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "ta-agent", about = "RA-WEBs TA provisioning client and example server")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Register with the Verifier and obtain a certificate. Running it again
    /// re-provisions with the same key.
    Provision {
        #[arg(long)]
        config: PathBuf,
    },
    /// Serve the TA page using the stored certificate.
    Serve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Create a mock TEE root key pair for local deployments.
    MockTeeKey {
        /// Output path of the PKCS#8 DER secret key.
        #[arg(long)]
        secret: PathBuf,
        /// Output path of the base64 DER public key, as read by the Verifier.
        #[arg(long)]
        public: PathBuf,
    },
}

fn load_tee(config: &TaConfig) -> anyhow::Result<TeeRoot> {
    let Some(path) = &config.tee_key else {
        bail!("tee_key is required to produce evidence");
    };
    let der = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(TeeRoot::new(KeyPair::from_pkcs8_der(&der)?, config.tee_id.clone()))
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .init();
    match Cli::parse().command {
        Command::Provision { config } => {
            let config = TaConfig::load(&config)?;
            let tee = load_tee(&config)?;
            let (key, cert) = tokio::task::spawn_blocking(move || {
                ta_provision(
                    &config,
                    &tee,
                    &Clock::real(),
                    &KeyStore::dir(&config.state_dir),
                    &HttpVerifier::new(&config.verifier_url),
                    &HttpCt::new(&config.ca_url),
                    &mut OsRng,
                )
            })
            .await??;
            println!("certificate serial {} for {}", cert.body.serial, cert.body.domain);
            println!("public key sha256 {}", hex::encode(key.public().digest()));
        }
        Command::Serve { config } => {
            let config = TaConfig::load(&config)?;
            let cert = KeyStore::dir(&config.state_dir)
                .load_certificate()?
                .context("no certificate stored; run `ta-agent provision` first")?;
            let handle = ta_serve(&config.listen, PageOptions::for_config(&config), &cert).await?;
            tracing::info!(addr = %handle.addr, "TA listening");
            tokio::signal::ctrl_c().await?;
            handle.stop().await;
        }
        Command::MockTeeKey { secret, public } => {
            let key = KeyPair::generate(&mut OsRng)?;
            std::fs::write(&secret, key.to_pkcs8_der())?;
            std::fs::write(&public, STANDARD.encode(key.public().der()))?;
            println!("wrote {} and {}", secret.display(), public.display());
        }
    }
    Ok(())
}
