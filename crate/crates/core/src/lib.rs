// SPDX-License-Identifier: Apache-2.0

//! Shared building blocks for RA-WEBs: the protocol data model, the mock TEE
//! that produces attestation evidence, and the builder that measures code.
//!
//! Every signed or hashed structure uses a length-prefixed canonical encoding
//! (see [`codec`]), so two parties that agree on the field values always agree
//! on the bytes.

pub mod attestation;
pub mod builder;
pub mod bundle;
pub mod clock;
pub mod codec;
pub mod crypto;
pub mod domain;
mod error;
pub mod evidence;

pub use attestation::{
    compute_reference_value, generate_evidence, verify_evidence, FreshnessPolicy, TeeRoot,
    TrustAnchors, VerificationOutcome, VerificationReason,
};
pub use builder::{build_and_measure, LocalFetcher, MemoryFetcher, RepositoryFetcher, RepositoryRef};
pub use bundle::CodeBundle;
pub use clock::{Clock, Timestamp};
pub use crypto::{seeded_keypair, sha256, KeyPair, PublicKey};
pub use domain::Domain;
pub use error::{Error, Result};
pub use evidence::{Evidence, ReferenceValue};
