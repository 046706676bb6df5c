//! Per-run result record and small statistics helpers.

/// Everything one simulation run reports. Rates are application-layer;
/// delays cover submission to first arrival at the sink.
#[derive(Clone, PartialEq, Debug)]
pub struct MetricsRecord {
    /// Requests submitted inside the measurement window.
    pub requests_sent: u64,
    /// Of the resolved requests, how many reached the sink at least
    /// once (duplicates count once).
    pub requests_received: u64,
    /// Exchanges acknowledged / failed / still unresolved at the end of
    /// the window. Unresolved ones are excluded from the delivery ratio.
    pub acked_exchanges: u64,
    pub failed_exchanges: u64,
    pub pending_exchanges: u64,
    /// requests_received over resolved requests; 1.0 when nothing was
    /// sent (check `requests_sent` to tell the two apart).
    pub pdr: f64,
    pub offered_load_kbps: f64,
    /// Offered load actually generated, for fidelity checks.
    pub measured_offered_kbps: f64,
    /// pdr x offered load.
    pub carried_load_kbps: f64,
    /// Delay statistics over delivered requests; 0 when none delivered.
    pub mean_delay_s: f64,
    pub p95_delay_s: f64,
    /// CoAP-layer retransmissions across all clients.
    pub retransmissions: u64,
    /// MAC drops by cause, summed over nodes.
    pub mac_overflows: u64,
    pub csma_drops: u64,
    pub link_retry_exhausted: u64,
    pub collisions: u64,
    /// Frame totals for conservation cross-checks.
    pub frames_enqueued: u64,
    pub frames_delivered: u64,
    /// Transmissions started, link retries included.
    pub tx_attempts: u64,
    /// ACKs that matched no in-flight exchange (late duplicates).
    pub stale_acks: u64,
    /// Messages the workload should never produce (NON/RST/misroutes).
    pub anomalies: u64,
}

/// Mean and 95th-percentile (nearest-rank) of a sample set.
pub fn delay_stats(delays: &mut [f64]) -> (f64, f64) {
    if delays.is_empty() {
        return (0.0, 0.0);
    }
    delays.sort_by(f64::total_cmp);
    let mean = delays.iter().sum::<f64>() / delays.len() as f64;
    let rank = ((0.95 * delays.len() as f64).ceil() as usize).max(1);
    (mean, delays[rank - 1])
}
