// SPDX-License-Identifier: Apache-2.0

use std::sync::Arc;
use std::time::Duration;

use tokio::task::JoinHandle;
use tokio::time::MissedTickBehavior;

use crate::verifier::Verifier;

/// Runs `monitoring_step` every `interval` until the handle is aborted.
pub fn spawn_monitor(verifier: Arc<Verifier>, interval: Duration) -> JoinHandle<()> {
    tokio::spawn(async move {
        let mut ticker = tokio::time::interval(interval);
        ticker.set_missed_tick_behavior(MissedTickBehavior::Delay);
        loop {
            ticker.tick().await;
            let v = verifier.clone();
            match tokio::task::spawn_blocking(move || v.monitoring_step()).await {
                Ok(Ok(report)) if report.processed > 0 => tracing::info!(
                    processed = report.processed,
                    activated = report.activated.len(),
                    violations = report.violations.len(),
                    delivered = report.delivery.delivered,
                    "monitoring step"
                ),
                Ok(Ok(_)) => {}
                Ok(Err(e)) => tracing::error!(error = %e, "monitoring step failed"),
                Err(e) => tracing::error!(error = %e, "monitoring task panicked"),
            }
        }
    })
}
