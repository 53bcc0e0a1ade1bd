// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Context;
use clap::{Parser, ValueEnum};
use rawebs_core::{Clock, KeyPair};
use rawebs_ct::{CertificateAuthority, CtLog, CtStack, DelayPolicy, LogConfig};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Delay {
    Zero,
    Fixed,
    Uniform,
}

/// Serves a mock CA, CT log and CT monitor over HTTP.
#[derive(Debug, Parser)]
#[command(name = "rawebs-ct", version)]
struct Args {
    #[arg(long, default_value = "127.0.0.1:8470")]
    listen: SocketAddr,
    /// Maximum merge delay in seconds.
    #[arg(long, default_value_t = rawebs_ct::DEFAULT_MMD)]
    mmd: u64,
    #[arg(long, value_enum, default_value = "fixed")]
    delay: Delay,
    /// Delay used by `--delay fixed`; defaults to the MMD.
    #[arg(long)]
    fixed_delay: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Extra seconds the monitor trails the log by.
    #[arg(long, default_value_t = 0)]
    monitor_lag: u64,
    #[arg(long, default_value = "RA-WEBs Mock CA")]
    issuer: String,
    /// PKCS#8 DER log signing key; generated and written here if missing.
    #[arg(long)]
    log_key: Option<PathBuf>,
}

fn load_or_create_key(path: Option<&PathBuf>) -> anyhow::Result<KeyPair> {
    let mut rng = rand::thread_rng();
    match path {
        Some(p) if p.exists() => {
            KeyPair::from_pkcs8_der(&fs::read(p)?).with_context(|| format!("reading {}", p.display()))
        }
        Some(p) => {
            let key = KeyPair::generate(&mut rng)?;
            fs::write(p, key.to_pkcs8_der())?;
            Ok(key)
        }
        None => Ok(KeyPair::generate(&mut rng)?),
    }
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .init();
    let args = Args::parse();

    let delay = match args.delay {
        Delay::Zero => DelayPolicy::Zero,
        Delay::Fixed => DelayPolicy::Fixed(args.fixed_delay.unwrap_or(args.mmd)),
        Delay::Uniform => DelayPolicy::Uniform { seed: args.seed },
    };
    let key = load_or_create_key(args.log_key.as_ref())?;
    let clock = Clock::real();
    let log = CtLog::new(key, LogConfig { log_id: None, mmd: args.mmd, delay })?;
    tracing::info!(log_id = log.log_id(), mmd = args.mmd, "log ready");
    let stack = Arc::new(CtStack::new(
        CertificateAuthority::new(args.issuer),
        log,
        args.monitor_lag,
        clock,
    ));

    let listener = tokio::net::TcpListener::bind(args.listen).await?;
    tracing::info!(addr = %args.listen, "listening");
    axum::serve(listener, rawebs_ct::service::router(stack)).await?;
    Ok(())
}
