// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::str::FromStr;

use rawebs_core::{generate_evidence, seeded_keypair};
use rawebs_ct::DEFAULT_MMD;
use rawebs_ta_agent::{has_status_link, render_page, PageOptions, RegistrationRequest, TaError, VerifierApi};
use rawebs_verifier::{TaState, VerifierError};
use serde::{Deserialize, Serialize};

use crate::report::{Outcome, ScenarioReport};
use crate::world::{InProcessVerifier, World};
use crate::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioName {
    HappyPath,
    DomainImpersonation,
    Reregistration,
    PreexistingCert,
    EvidenceTamper,
    Evasion,
    ImpersonationDuringMmd,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 7] = [
        Self::HappyPath,
        Self::DomainImpersonation,
        Self::Reregistration,
        Self::PreexistingCert,
        Self::EvidenceTamper,
        Self::Evasion,
        Self::ImpersonationDuringMmd,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::HappyPath => "happy_path",
            Self::DomainImpersonation => "domain_impersonation",
            Self::Reregistration => "reregistration",
            Self::PreexistingCert => "preexisting_cert",
            Self::EvidenceTamper => "evidence_tamper",
            Self::Evasion => "evasion",
            Self::ImpersonationDuringMmd => "impersonation_during_mmd",
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| SimError::InvalidSpec(format!("unknown scenario {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: ScenarioName,
    pub mmd: u64,
    pub monitor_lag: u64,
    pub poll_interval: u64,
    pub seed: u64,
    /// Simulated seconds per tick.
    pub step: u64,
}

impl ScenarioSpec {
    pub fn new(name: ScenarioName) -> Self {
        Self { name, mmd: DEFAULT_MMD, monitor_lag: 0, poll_interval: 600, seed: 0, step: 60 }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.step == 0 {
            return Err(SimError::InvalidSpec("step must be positive".into()));
        }
        if self.poll_interval == 0 {
            return Err(SimError::InvalidSpec("poll_interval must be positive".into()));
        }
        Ok(())
    }
}

struct Run {
    world: World,
    name: ScenarioName,
}

impl Run {
    fn ensure(&self, cond: bool, assertion: impl Into<String>) -> Result<()> {
        if cond {
            Ok(())
        } else {
            Err(SimError::ScenarioFailure { scenario: self.name, assertion: assertion.into() })
        }
    }

    fn fail<T>(&self, assertion: impl Into<String>) -> Result<T> {
        Err(SimError::ScenarioFailure { scenario: self.name, assertion: assertion.into() })
    }

    /// Provision, certificate, subscriptions and activation of an honest TA.
    fn establish(&mut self) -> Result<()> {
        let w = &mut self.world;
        let code = w.publish_code("v1", "hello");
        let provisioned = w.provision("v1", &code);
        let (key, cert) = match provisioned {
            Ok(ok) => ok,
            Err(e) => return self.fail(format!("honest provisioning failed: {e}")),
        };
        self.check_binding(&key, &cert)?;
        let w = &mut self.world;
        w.subscribe_user("alice");
        w.subscribe_user("bob");
        let pending = matches!(self.world.status(), Ok(s) if s.state == TaState::Pending);
        self.ensure(pending, "TA must start pending")?;
        let deadline = self.world.now() + self.world.bound();
        let activated = self.world.run_until(deadline, |w| w.is_valid());
        self.ensure(activated, "TA was not activated within mmd + lag + poll")?;
        self.world.event("user", "status", "valid=true");
        Ok(())
    }

    /// The registered key, the certificate key and the key the TA serves
    /// with must be the same, and the SCT must verify under the log key.
    fn check_binding(&mut self, key: &rawebs_core::KeyPair, cert: &rawebs_ct::Certificate) -> Result<()> {
        let w = &self.world;
        let registered = w.verifier.store().latest_server(&w.domain()).ok().flatten();
        let served = w.ta_keys.load_certificate().ok().flatten();
        let ok = registered.is_some_and(|s| s.public_key == key.public().der())
            && &cert.body.public_key == key.public()
            && served.is_some_and(|c| &c.body.public_key == key.public());
        self.ensure(ok, "registered, certified and served keys differ")?;
        let log_key = w.ct.log().public_key().clone();
        self.ensure(cert.embedded_scts.iter().all(|s| s.verify(&log_key)), "embedded SCT does not verify")?;
        self.world.event("harness", "binding_checked", "registered=certified=served");
        Ok(())
    }

    fn report(mut self, outcome: Outcome, detection_latency: Option<u64>, undetected_window: Option<u64>) -> ScenarioReport {
        let final_valid = self.world.status().ok().map(|s| s.valid);
        ScenarioReport {
            scenario: self.name,
            outcome,
            detection_latency,
            undetected_window,
            detection_bound: self.world.bound(),
            notifications_delivered: self.world.push.deliveries().len() as u64,
            final_valid,
            spec: self.world.spec.clone(),
            events: self.world.take_events(),
        }
    }
}

fn rejection_code(err: &TaError) -> Option<&str> {
    match err {
        TaError::ProvisioningRejected(r) => Some(r.code.as_str()),
        _ => None,
    }
}

fn happy_path(mut run: Run) -> Result<ScenarioReport> {
    run.establish()?;
    let status = run.world.status().expect("registered");
    run.ensure(status.valid && status.violations.is_empty(), "final status must be valid with no violations")?;
    let page = render_page(&PageOptions { status_url: "http://verifier.sim/app/verification-status".into(), include_status_link: true });
    run.ensure(page.contains("hello"), "TA page lacks greeting")?;
    Ok(run.report(Outcome::NotApplicable, None, None))
}

fn domain_impersonation(mut run: Run) -> Result<ScenarioReport> {
    run.establish()?;
    let wait = run.world.jitter(run.world.spec.poll_interval);
    let t = run.world.now() + wait;
    run.world.advance_to(t);
    run.world.adversary_issue();
    let attack_at = run.world.now();
    let deadline = attack_at + run.world.bound();
    let detected = run.world.run_until(deadline, |w| w.first_violation_at.is_some());
    run.ensure(detected, "no violation within mmd + lag + poll")?;
    let latency = run.world.first_violation_at.expect("detected") - attack_at;
    run.ensure(latency <= run.world.bound(), format!("detection latency {latency}s exceeds bound"))?;
    run.ensure(run.world.deliveries_of_kind("violation") >= 1, "no violation notification delivered")?;
    run.ensure(!run.world.is_valid(), "TA still valid after violation")?;
    run.world.event("harness", "detected", format!("latency={latency}"));
    Ok(run.report(Outcome::Detected, Some(latency), None))
}

fn preexisting_cert(mut run: Run) -> Result<ScenarioReport> {
    run.world.adversary_issue();
    let domain = run.world.domain();
    let deadline = run.world.now() + run.world.spec.mmd + run.world.spec.monitor_lag;
    let visible = run.world.run_until(deadline, |w| !w.ct.monitor().query(&domain, w.now()).is_empty());
    run.ensure(visible, "adversary certificate never reached the monitor")?;
    let code = run.world.publish_code("v1", "hello");
    let entries_before = run.world.ct.log().len();
    match run.world.provision("v1", &code) {
        Err(e) if rejection_code(&e) == Some("preexisting_certificate") => {}
        Err(e) => return run.fail(format!("expected preexisting_certificate, got {e}")),
        Ok(_) => return run.fail("registration succeeded despite a published certificate"),
    }
    run.ensure(matches!(run.world.status(), Err(VerifierError::NotFound)), "rejected registration left a record")?;
    run.ensure(run.world.ct.log().len() == entries_before, "TA requested a certificate after rejection")?;
    run.world.event("harness", "prevented", "registration terminated");
    Ok(run.report(Outcome::Prevented, None, None))
}

fn evidence_tamper(mut run: Run) -> Result<ScenarioReport> {
    // The TA runs code other than the published commit.
    run.world.publish_code("v1", "hello");
    let modified = run.world.publish_code("v1-modified", "hello, and leak secrets");
    match run.world.provision("v1", &modified) {
        Err(e) if rejection_code(&e) == Some("evidence_rejected") => {}
        other => return run.fail(format!("modified code was not rejected: {:?}", other.map(|_| ()))),
    }

    // Evidence produced for one key, registered with another.
    let honest = seeded_keypair(crate::world::TA_KEY_SEED);
    let swapped = run.world.adversary_key();
    let bundle = run.world.publish_code("v1", "hello");
    let rv = rawebs_core::compute_reference_value(&bundle);
    let evidence = generate_evidence(&run.world.tee, rv, honest.public(), &run.world.clock).expect("signing");
    let config = run.world.ta_config("v1");
    let req = RegistrationRequest::new(&config.repository, &config.commit_id, &config.domain, swapped.public(), &evidence);
    let api = InProcessVerifier(run.world.verifier.clone());
    match api.register(&config.service_token, &req) {
        Err(r) if r.code == "evidence_rejected" => run.world.event("ta", "provision_failed", r.to_string()),
        other => return run.fail(format!("key-swapped evidence was not rejected: {other:?}")),
    }
    run.ensure(matches!(run.world.status(), Err(VerifierError::NotFound)), "rejected registration left a record")?;
    run.world.event("harness", "prevented", "evidence rejected");
    Ok(run.report(Outcome::Prevented, None, None))
}

fn reregistration(mut run: Run) -> Result<ScenarioReport> {
    run.establish()?;
    let old_rv = run.world.status().expect("registered").rv;
    let before = run.world.deliveries_of_kind("reregistered");
    let code = run.world.publish_code("v2", "hello from v2");
    let reregistered_at = run.world.now();
    if let Err(e) = run.world.provision("v2", &code) {
        return run.fail(format!("re-registration failed: {e}"));
    }
    let notified_at = run.world.now();
    let notified = run.world.deliveries_of_kind("reregistered") - before;
    run.ensure(notified >= 1, "subscribers of the old TA were not notified")?;
    run.world.event("verifier", "notified", format!("reregistered delivered={notified}"));
    let status = run.world.status().expect("registered");
    run.ensure(!status.valid && status.rv != old_rv, "new registration must start invalid with the new rv")?;
    let deadline = run.world.now() + run.world.bound();
    let reactivated = run.world.run_until(deadline, |w| w.is_valid());
    run.ensure(reactivated, "re-registered TA never re-activated")?;
    Ok(run.report(Outcome::Detected, Some(notified_at - reregistered_at), None))
}

fn evasion(mut run: Run) -> Result<ScenarioReport> {
    run.establish()?;
    let status_url = run.world.ta_config("v1").status_url();
    let honest = render_page(&PageOptions { status_url: status_url.clone(), include_status_link: true });
    run.ensure(has_status_link(&honest, &status_url), "honest page fails inspection")?;
    let served = render_page(&PageOptions { status_url: status_url.clone(), include_status_link: false });
    run.world.event("ta", "served_page", "status link omitted");
    run.ensure(!has_status_link(&served, &status_url), "inspection missed the omitted status link")?;
    run.world.event("harness", "detected", "page has no verification status link");
    Ok(run.report(Outcome::Detected, Some(0), None))
}

fn impersonation_during_mmd(mut run: Run) -> Result<ScenarioReport> {
    run.establish()?;
    let wait = run.world.jitter(run.world.spec.poll_interval);
    let t = run.world.now() + wait;
    run.world.advance_to(t);
    run.world.adversary_issue();
    let attack_at = run.world.now();
    let deadline = attack_at + run.world.bound();
    let mut valid_throughout = true;
    let detected = run.world.run_until(deadline, |w| {
        if w.first_violation_at.is_some() {
            return true;
        }
        valid_throughout &= w.is_valid();
        false
    });
    run.ensure(detected, "no violation within mmd + lag + poll")?;
    run.ensure(valid_throughout, "users saw an invalid verdict before detection")?;
    let window = run.world.first_violation_at.expect("detected") - attack_at;
    run.ensure(window <= run.world.bound(), format!("undetected window {window}s exceeds bound"))?;
    run.world.event("harness", "window_closed", format!("undetected_window={window}"));
    Ok(run.report(Outcome::UndetectedInWindow, None, Some(window)))
}

pub fn run_scenario(spec: &ScenarioSpec) -> Result<ScenarioReport> {
    spec.validate()?;
    let mut world = World::new(spec.clone());
    world.event("harness", "start", spec.name.as_str());
    let run = Run { world, name: spec.name };
    match spec.name {
        ScenarioName::HappyPath => happy_path(run),
        ScenarioName::DomainImpersonation => domain_impersonation(run),
        ScenarioName::Reregistration => reregistration(run),
        ScenarioName::PreexistingCert => preexisting_cert(run),
        ScenarioName::EvidenceTamper => evidence_tamper(run),
        ScenarioName::Evasion => evasion(run),
        ScenarioName::ImpersonationDuringMmd => impersonation_during_mmd(run),
    }
}

/// Runs every scenario with default timing and the given seed.
pub fn run_all(seed: u64) -> Result<Vec<ScenarioReport>> {
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for name in ScenarioName::ALL {
        match run_scenario(&ScenarioSpec::new(name).with_seed(seed)) {
            Ok(r) => reports.push(r),
            Err(e) => failures.push(e),
        }
    }
    if failures.is_empty() {
        Ok(reports)
    } else {
        Err(SimError::Aggregate(failures))
    }
}
