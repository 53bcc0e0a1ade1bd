// SPDX-License-Identifier: Apache-2.0

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::{Error, Result};

/// Seconds since the Unix epoch.
pub type Timestamp = u64;

/// Wall clock or a shared simulated clock. Clones of a simulated clock share
/// the same time; it only moves forward through [`Clock::advance`].
#[derive(Debug, Clone)]
pub struct Clock(Inner);

#[derive(Debug, Clone)]
enum Inner {
    Real,
    Simulated(Arc<AtomicU64>),
}

impl Clock {
    pub fn real() -> Self {
        Self(Inner::Real)
    }

    pub fn simulated(start: Timestamp) -> Self {
        Self(Inner::Simulated(Arc::new(AtomicU64::new(start))))
    }

    pub fn is_simulated(&self) -> bool {
        matches!(self.0, Inner::Simulated(_))
    }

    pub fn now(&self) -> Timestamp {
        match &self.0 {
            Inner::Real => SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            Inner::Simulated(t) => t.load(Ordering::SeqCst),
        }
    }

    /// Moves a simulated clock forward and returns the new time.
    pub fn advance(&self, secs: u64) -> Result<Timestamp> {
        match &self.0 {
            Inner::Real => Err(Error::RealClock),
            Inner::Simulated(t) => {
                let prev = t
                    .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |now| {
                        Some(now.saturating_add(secs))
                    })
                    .expect("closure never fails");
                Ok(prev.saturating_add(secs))
            }
        }
    }

    /// Advances to `target` if it lies in the future; never moves backward.
    pub fn advance_to(&self, target: Timestamp) -> Result<Timestamp> {
        let now = self.now();
        self.advance(target.saturating_sub(now))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simulated_clock_is_shared_and_monotone() {
        let clock = Clock::simulated(100);
        let other = clock.clone();
        assert_eq!(clock.advance(50).unwrap(), 150);
        assert_eq!(other.now(), 150);
        assert_eq!(other.advance_to(120).unwrap(), 150);
        assert_eq!(other.advance_to(200).unwrap(), 200);
        assert_eq!(clock.now(), 200);
    }

    #[test]
    fn real_clock_cannot_advance() {
        let clock = Clock::real();
        assert!(clock.now() > 1_600_000_000);
        assert!(matches!(clock.advance(1), Err(Error::RealClock)));
    }

    #[test]
    fn concurrent_advances_are_not_lost() {
        let clock = Clock::simulated(0);
        std::thread::scope(|s| {
            for _ in 0..8 {
                let c = clock.clone();
                s.spawn(move || {
                    for _ in 0..1000 {
                        c.advance(1).unwrap();
                    }
                });
            }
        });
        assert_eq!(clock.now(), 8000);
    }
}
