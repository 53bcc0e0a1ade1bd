// SPDX-License-Identifier: Apache-2.0

//! The RA-WEBs Verifier: registers TAs after checking their attestation
//! evidence against a reproducible build, watches the CT log for
//! certificates issued to registered domains, and notifies subscribed users
//! when a certificate carries a key other than the attested one.

pub mod api;
pub mod config;
mod error;
pub mod push;
pub mod store;
pub mod verifier;
pub mod worker;

pub use api::{router, ApiState};
pub use config::VerifierConfig;
pub use error::{Result, VerifierError};
pub use push::{DeliveryReport, HttpPushTransport, PushKeys, PushMessage, PushTransport, RecordingTransport};
pub use store::Store;
pub use verifier::{
    Components, MonitoringReport, ProvisionRequest, Provisioned, SubscriptionKeys, SubscriptionRequest, TaState,
    TaStatus, Verifier,
};
