// SPDX-License-Identifier: Apache-2.0

//! TA side of RA-WEBs: registers a TA with the Verifier, obtains its
//! certificate from the CA, and serves an example page that links users to
//! the Verifier's status page.

pub mod client;
pub mod config;
pub mod keystore;
pub mod provision;
pub mod server;

use thiserror::Error;

pub use client::{HttpVerifier, RegistrationReceipt, RegistrationRequest, Rejection, VerifierApi};
pub use config::TaConfig;
pub use keystore::KeyStore;
pub use provision::{ta_provision, ta_provision_bundle};
pub use server::{has_status_link, page_router, render_page, ta_serve, PageOptions, ServerHandle, CERTIFICATE_HEADER};

pub type Result<T, E = TaError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum TaError {
    #[error("verifier rejected the registration: {0}")]
    ProvisioningRejected(Rejection),

    #[error("certificate issuance failed: {0}")]
    CaFailure(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot bind {addr}: {reason}")]
    BindFailure { addr: String, reason: String },

    #[error(transparent)]
    Core(#[from] rawebs_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
