// SPDX-License-Identifier: Apache-2.0

//! The CT monitor: a per-domain certificate feed over one log, plus the
//! plain-text record format used when it is served over HTTP.

use std::fmt::Write as _;
use std::sync::Arc;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use rawebs_core::{Clock, Domain, PublicKey, Timestamp};

use crate::log::{CtLog, LogEntry};
use crate::{CtError, Result};

/// What a monitor reports about one published log entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonitorRecord {
    pub index: u64,
    pub serial: u64,
    pub domain: Domain,
    pub public_key: PublicKey,
    pub publish_time: Timestamp,
}

impl From<&LogEntry> for MonitorRecord {
    fn from(e: &LogEntry) -> Self {
        Self {
            index: e.index,
            serial: e.precert.body.serial,
            domain: e.precert.body.domain.clone(),
            public_key: e.precert.body.public_key.clone(),
            publish_time: e.publish_time,
        }
    }
}

/// Source of published certificates, in process or over HTTP.
pub trait MonitorFeed: Send + Sync {
    /// Every visible entry for `domain`, in index order.
    fn certs_for_domain(&self, domain: &Domain) -> Result<Vec<MonitorRecord>>;

    /// Every visible entry with index ≥ `start`, in index order.
    fn entries_since(&self, start: u64) -> Result<Vec<MonitorRecord>>;
}

/// Watches a log and exposes entries `lag` seconds after they are merged.
pub struct CtMonitor {
    log: Arc<CtLog>,
    lag: u64,
    clock: Clock,
}

impl CtMonitor {
    pub fn new(log: Arc<CtLog>, lag: u64, clock: Clock) -> Self {
        Self { log, lag, clock }
    }

    pub fn lag(&self) -> u64 {
        self.lag
    }

    pub fn query(&self, domain: &Domain, now: Timestamp) -> Vec<LogEntry> {
        match now.checked_sub(self.lag) {
            Some(until) => self.log.domain_entries_published_by(domain, until),
            None => Vec::new(),
        }
    }

    pub fn entries(&self, start: u64, now: Timestamp) -> Vec<LogEntry> {
        match now.checked_sub(self.lag) {
            Some(until) => self.log.entries_published_by(start, until),
            None => Vec::new(),
        }
    }
}

impl MonitorFeed for CtMonitor {
    fn certs_for_domain(&self, domain: &Domain) -> Result<Vec<MonitorRecord>> {
        Ok(self.query(domain, self.clock.now()).iter().map(MonitorRecord::from).collect())
    }

    fn entries_since(&self, start: u64) -> Result<Vec<MonitorRecord>> {
        Ok(self.entries(start, self.clock.now()).iter().map(MonitorRecord::from).collect())
    }
}

/// One record per line:
/// `index=<n> serial=<n> domain=<name> pk=<base64 der> publish_time=<secs>`.
pub fn format_records(records: &[MonitorRecord]) -> String {
    let mut out = String::new();
    for r in records {
        writeln!(
            out,
            "index={} serial={} domain={} pk={} publish_time={}",
            r.index,
            r.serial,
            r.domain,
            BASE64.encode(r.public_key.der()),
            r.publish_time
        )
        .expect("writing to a string");
    }
    out
}

pub fn parse_records(text: &str) -> Result<Vec<MonitorRecord>> {
    text.lines().filter(|l| !l.trim().is_empty()).map(parse_record).collect()
}

fn parse_record(line: &str) -> Result<MonitorRecord> {
    let (mut index, mut serial, mut domain, mut pk, mut publish_time) = (None, None, None, None, None);
    for field in line.split_whitespace() {
        let (key, value) = field.split_once('=').ok_or(CtError::Malformed("record field"))?;
        let num = || value.parse::<u64>().map_err(|_| CtError::Malformed("record number"));
        match key {
            "index" => index = Some(num()?),
            "serial" => serial = Some(num()?),
            "publish_time" => publish_time = Some(num()?),
            "domain" => domain = Some(Domain::canonicalize(value)?),
            "pk" => {
                let der = BASE64.decode(value).map_err(|_| CtError::Malformed("record pk"))?;
                pk = Some(PublicKey::from_der(&der)?);
            }
            _ => {}
        }
    }
    let missing = || CtError::Malformed("record is missing a field");
    Ok(MonitorRecord {
        index: index.ok_or_else(missing)?,
        serial: serial.ok_or_else(missing)?,
        domain: domain.ok_or_else(missing)?,
        public_key: pk.ok_or_else(missing)?,
        publish_time: publish_time.ok_or_else(missing)?,
    })
}
