// SPDX-License-Identifier: Apache-2.0

use std::sync::Arc;

use rawebs_core::{Clock, Domain, PublicKey};

use crate::ca::CertificateAuthority;
use crate::cert::Certificate;
use crate::log::CtLog;
use crate::monitor::{CtMonitor, MonitorFeed, MonitorRecord};
use crate::Result;

/// Anything a TA (or an adversary) can ask for a certificate.
pub trait CertificateIssuer: Send + Sync {
    fn issue(&self, domain: &Domain, pk: &PublicKey) -> Result<Certificate>;
}

/// CA, log and monitor wired together on one clock.
pub struct CtStack {
    ca: CertificateAuthority,
    log: Arc<CtLog>,
    monitor: CtMonitor,
    clock: Clock,
}

impl CtStack {
    pub fn new(ca: CertificateAuthority, log: CtLog, monitor_lag: u64, clock: Clock) -> Self {
        let log = Arc::new(log);
        let monitor = CtMonitor::new(log.clone(), monitor_lag, clock.clone());
        Self { ca, log, monitor, clock }
    }

    pub fn ca(&self) -> &CertificateAuthority {
        &self.ca
    }

    pub fn log(&self) -> &CtLog {
        &self.log
    }

    pub fn monitor(&self) -> &CtMonitor {
        &self.monitor
    }

    pub fn clock(&self) -> &Clock {
        &self.clock
    }
}

impl CertificateIssuer for CtStack {
    /// Precertificate, then SCT from the log, then the final certificate.
    fn issue(&self, domain: &Domain, pk: &PublicKey) -> Result<Certificate> {
        let precert = self.ca.issue_precertificate(domain, pk, &self.clock);
        let sct = self.log.append(precert.clone(), &self.clock)?;
        self.ca.finalize_certificate(precert, vec![sct])
    }
}

impl MonitorFeed for CtStack {
    fn certs_for_domain(&self, domain: &Domain) -> Result<Vec<MonitorRecord>> {
        self.monitor.certs_for_domain(domain)
    }

    fn entries_since(&self, start: u64) -> Result<Vec<MonitorRecord>> {
        self.monitor.entries_since(start)
    }
}
