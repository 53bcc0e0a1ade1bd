// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;
use std::sync::RwLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rawebs_core::codec::Encoder;
use rawebs_core::{Clock, Domain, KeyPair, PublicKey, Timestamp};

use crate::cert::{Precertificate, Sct};
use crate::merkle::{Hash, MerkleTree};
use crate::{CtError, Result};

const STH_MAGIC: &[u8] = b"RAWEBS-STH1";

/// Maximum merge delay most real logs advertise.
pub const DEFAULT_MMD: u64 = 86_400;

/// How long a submitted entry waits before it is merged into the tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelayPolicy {
    Zero,
    Fixed(u64),
    /// Uniform in `[0, mmd]`, drawn from a seeded generator.
    Uniform { seed: u64 },
}

#[derive(Debug, Clone)]
pub struct LogConfig {
    pub log_id: Option<String>,
    pub mmd: u64,
    pub delay: DelayPolicy,
}

impl Default for LogConfig {
    fn default() -> Self {
        Self { log_id: None, mmd: DEFAULT_MMD, delay: DelayPolicy::Fixed(DEFAULT_MMD) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogEntry {
    pub index: u64,
    pub precert: Precertificate,
    pub submit_time: Timestamp,
    pub publish_time: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedTreeHead {
    pub tree_size: u64,
    pub root_hash: Hash,
    pub timestamp: Timestamp,
    pub signature: Vec<u8>,
}

impl SignedTreeHead {
    pub fn signed_payload(tree_size: u64, timestamp: Timestamp, root_hash: &Hash) -> Vec<u8> {
        let mut enc = Encoder::with_magic(STH_MAGIC);
        enc.u64(tree_size).u64(timestamp).raw(root_hash);
        enc.finish()
    }

    pub fn verify(&self, log_key: &PublicKey) -> bool {
        log_key.verify(
            &Self::signed_payload(self.tree_size, self.timestamp, &self.root_hash),
            &self.signature,
        )
    }
}

struct State {
    entries: Vec<LogEntry>,
    tree: MerkleTree,
    by_domain: HashMap<Domain, Vec<u64>>,
    rng: ChaCha20Rng,
}

/// Append-only certificate log.
///
/// Entries are merged in index order: an entry's publish time is never
/// earlier than its predecessor's, so the published entries always form a
/// prefix of the log and the tree is built over that prefix.
pub struct CtLog {
    key: KeyPair,
    log_id: String,
    mmd: u64,
    delay: DelayPolicy,
    state: RwLock<State>,
}

impl CtLog {
    pub fn new(key: KeyPair, config: LogConfig) -> Result<Self> {
        if let DelayPolicy::Fixed(d) = config.delay {
            if d > config.mmd {
                return Err(CtError::InvalidConfig(format!(
                    "fixed delay {d}s exceeds the MMD of {}s",
                    config.mmd
                )));
            }
        }
        let seed = match config.delay {
            DelayPolicy::Uniform { seed } => seed,
            _ => 0,
        };
        let log_id = config.log_id.unwrap_or_else(|| hex::encode(key.public().digest()));
        Ok(Self {
            key,
            log_id,
            mmd: config.mmd,
            delay: config.delay,
            state: RwLock::new(State {
                entries: Vec::new(),
                tree: MerkleTree::new(),
                by_domain: HashMap::new(),
                rng: ChaCha20Rng::seed_from_u64(seed),
            }),
        })
    }

    pub fn log_id(&self) -> &str {
        &self.log_id
    }

    pub fn public_key(&self) -> &PublicKey {
        self.key.public()
    }

    pub fn mmd(&self) -> u64 {
        self.mmd
    }

    /// Records the precertificate and returns a signed timestamp for it.
    pub fn append(&self, precert: Precertificate, clock: &Clock) -> Result<Sct> {
        let mut state = self.state.write().expect("log lock poisoned");
        let submit_time = clock.now();
        let delay = match self.delay {
            DelayPolicy::Zero => 0,
            DelayPolicy::Fixed(d) => d,
            DelayPolicy::Uniform { .. } => state.rng.gen_range(0..=self.mmd),
        };
        let floor = state.entries.last().map_or(0, |e| e.publish_time);
        let publish_time = (submit_time + delay).max(floor);

        let sct = Sct::sign(&self.key, &self.log_id, submit_time, precert.entry_hash())?;
        let index = state.entries.len() as u64;
        state.tree.push(&precert.to_bytes());
        state.by_domain.entry(precert.body.domain.clone()).or_default().push(index);
        state.entries.push(LogEntry { index, precert, submit_time, publish_time });
        Ok(sct)
    }

    pub fn len(&self) -> u64 {
        self.state.read().expect("log lock poisoned").entries.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of entries merged by `now`.
    pub fn published_count(&self, now: Timestamp) -> u64 {
        let state = self.state.read().expect("log lock poisoned");
        Self::visible(&state, now)
    }

    fn visible(state: &State, now: Timestamp) -> u64 {
        state.entries.partition_point(|e| e.publish_time <= now) as u64
    }

    pub fn entry(&self, index: u64) -> Option<LogEntry> {
        let state = self.state.read().expect("log lock poisoned");
        state.entries.get(index as usize).cloned()
    }

    pub fn leaf_hash(&self, index: u64) -> Option<Hash> {
        self.state.read().expect("log lock poisoned").tree.leaf(index)
    }

    /// Entries with `start <= index` and `publish_time <= until`.
    pub fn entries_published_by(&self, start: u64, until: Timestamp) -> Vec<LogEntry> {
        let state = self.state.read().expect("log lock poisoned");
        let end = Self::visible(&state, until) as usize;
        let start = (start as usize).min(end);
        state.entries[start..end].to_vec()
    }

    pub fn domain_entries_published_by(&self, domain: &Domain, until: Timestamp) -> Vec<LogEntry> {
        let state = self.state.read().expect("log lock poisoned");
        let end = Self::visible(&state, until);
        state
            .by_domain
            .get(domain)
            .map(|idx| {
                idx.iter()
                    .take_while(|i| **i < end)
                    .map(|i| state.entries[*i as usize].clone())
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn sth(&self, clock: &Clock) -> Result<SignedTreeHead> {
        let timestamp = clock.now();
        let (tree_size, root_hash) = {
            let state = self.state.read().expect("log lock poisoned");
            let size = Self::visible(&state, timestamp);
            (size, state.tree.root(size).expect("published size within tree"))
        };
        let signature = self
            .key
            .sign(&SignedTreeHead::signed_payload(tree_size, timestamp, &root_hash))?;
        Ok(SignedTreeHead { tree_size, root_hash, timestamp, signature })
    }

    pub fn inclusion_proof(&self, index: u64, tree_size: u64, clock: &Clock) -> Result<Vec<Hash>> {
        let state = self.state.read().expect("log lock poisoned");
        if tree_size > Self::visible(&state, clock.now()) {
            return Err(CtError::OutOfRange);
        }
        state.tree.inclusion_proof(index, tree_size).ok_or(CtError::OutOfRange)
    }

    pub fn consistency_proof(&self, old_size: u64, new_size: u64, clock: &Clock) -> Result<Vec<Hash>> {
        let state = self.state.read().expect("log lock poisoned");
        if new_size > Self::visible(&state, clock.now()) {
            return Err(CtError::OutOfRange);
        }
        state.tree.consistency_proof(old_size, new_size).ok_or(CtError::OutOfRange)
    }
}
