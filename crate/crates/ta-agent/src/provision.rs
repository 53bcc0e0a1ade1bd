// SPDX-License-Identifier: Apache-2.0

use rand::{CryptoRng, RngCore};
use rawebs_core::{compute_reference_value, generate_evidence, Clock, CodeBundle, KeyPair, TeeRoot};
use rawebs_ct::{Certificate, CertificateIssuer};

use crate::client::{RegistrationRequest, VerifierApi};
use crate::config::TaConfig;
use crate::keystore::KeyStore;
use crate::{Result, TaError};

/// Measures `config.code_dir` and provisions with it.
pub fn ta_provision<R: RngCore + CryptoRng>(
    config: &TaConfig,
    tee: &TeeRoot,
    clock: &Clock,
    keys: &KeyStore,
    verifier: &dyn VerifierApi,
    issuer: &dyn CertificateIssuer,
    rng: &mut R,
) -> Result<(KeyPair, Certificate)> {
    let origin = format!("{}@{}", config.repository, config.commit_id);
    let bundle = CodeBundle::from_dir(&config.code_dir, origin)?;
    ta_provision_bundle(config, &bundle, tee, clock, keys, verifier, issuer, rng)
}

/// Registers with the Verifier first and only then asks the CA for a
/// certificate, so a refused registration never produces one.
#[allow(clippy::too_many_arguments)]
pub fn ta_provision_bundle<R: RngCore + CryptoRng>(
    config: &TaConfig,
    bundle: &CodeBundle,
    tee: &TeeRoot,
    clock: &Clock,
    keys: &KeyStore,
    verifier: &dyn VerifierApi,
    issuer: &dyn CertificateIssuer,
    rng: &mut R,
) -> Result<(KeyPair, Certificate)> {
    let key = keys.load_or_generate(rng)?;
    let rv = compute_reference_value(bundle);
    let evidence = generate_evidence(tee, rv, key.public(), clock)?;
    let req = RegistrationRequest::new(&config.repository, &config.commit_id, &config.domain, key.public(), &evidence);
    let receipt = verifier.register(&config.service_token, &req).map_err(TaError::ProvisioningRejected)?;
    tracing::info!(domain = %config.domain, id = receipt.id, rv = %rv, "registered with verifier");

    let cert = issuer
        .issue(&config.domain, key.public())
        .map_err(|e| TaError::CaFailure(e.to_string()))?;
    if &cert.body.public_key != key.public() || cert.body.domain != config.domain {
        return Err(TaError::CaFailure("certificate does not match the requested domain and key".into()));
    }
    keys.save_certificate(&cert)?;
    Ok((key, cert))
}
