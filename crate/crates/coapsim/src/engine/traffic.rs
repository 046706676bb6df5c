//! Offered-load arithmetic for the constant-traffic workload.

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TrafficMode {
    /// Fixed inter-send interval with a random per-node phase.
    Periodic,
    /// Exponential inter-arrival times with the same mean.
    Poisson,
}

/// Seconds between sends for each of `clients` nodes so that their
/// combined application-layer rate equals `offered_load_kbps`.
pub fn per_node_interval_s(clients: usize, message_bytes: u32, offered_load_kbps: f64) -> f64 {
    debug_assert!(clients > 0);
    debug_assert!(offered_load_kbps > 0.0);
    clients as f64 * f64::from(message_bytes) * 8.0 / (offered_load_kbps * 1000.0)
}
