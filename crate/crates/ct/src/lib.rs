// SPDX-License-Identifier: Apache-2.0

//! Certificate issuance and transparency for RA-WEBs: a CA that issues
//! precertificates, an RFC 6962 style append-only log with a configurable
//! maximum merge delay, and a monitor that serves per-domain feeds.

pub mod ca;
pub mod cert;
pub mod client;
pub mod log;
pub mod merkle;
pub mod monitor;
pub mod service;
mod stack;

use thiserror::Error;

pub use ca::{CertificateAuthority, DEFAULT_VALIDITY};
pub use cert::{Certificate, CertificateBody, Precertificate, Sct};
pub use client::HttpCt;
pub use log::{CtLog, DelayPolicy, LogConfig, LogEntry, SignedTreeHead, DEFAULT_MMD};
pub use monitor::{CtMonitor, MonitorFeed, MonitorRecord};
pub use stack::{CertificateIssuer, CtStack};

pub type Result<T, E = CtError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CtError {
    #[error("index or tree size out of range")]
    OutOfRange,

    #[error("SCT list is empty or does not match the precertificate")]
    SctMismatch,

    #[error("malformed {0}")]
    Malformed(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("CT service unavailable: {0}")]
    Unavailable(String),

    #[error("CT service rejected the request ({status}): {body}")]
    Rejected { status: u16, body: String },

    #[error(transparent)]
    Core(#[from] rawebs_core::Error),
}
