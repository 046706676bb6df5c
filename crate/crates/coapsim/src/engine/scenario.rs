//! One simulation cell: a policy, a topology, radio conditions and an
//! offered load, plus every tunable with sensible defaults.

use crate::cc::{CcParams, PolicyKind};
use crate::mac::{MacParams, RadioParams};
use crate::message;
use crate::topology::{Topology, TopologyKind};

pub use crate::engine::traffic::TrafficMode;

pub const DEFAULT_WARMUP_S: f64 = 60.0;
pub const DEFAULT_MEASUREMENT_S: f64 = 900.0;

#[derive(Clone, Debug)]
pub struct Scenario {
    pub policy: PolicyKind,
    pub topology: Topology,
    /// Label used in result rows.
    pub topology_name: String,
    pub seed: u64,
    pub offered_load_kbps: f64,
    /// Network-formation phase before traffic starts.
    pub warmup_s: f64,
    /// Measurement window length after warm-up.
    pub measurement_s: f64,
    pub traffic_mode: TrafficMode,
    pub request_bytes: u32,
    pub ack_bytes: u32,
    pub max_retransmit: u32,
    pub cc: CcParams,
    pub radio: RadioParams,
    pub mac: MacParams,
    /// Record per-exchange trace events (costs memory on long runs).
    pub record_trace: bool,
}

impl Scenario {
    pub fn new(
        policy: PolicyKind,
        kind: TopologyKind,
        ldr: f64,
        offered_load_kbps: f64,
        seed: u64,
    ) -> Scenario {
        Scenario::with_topology(policy, Topology::build(kind), kind.name(), ldr, offered_load_kbps, seed)
    }

    pub fn with_topology(
        policy: PolicyKind,
        topology: Topology,
        name: &str,
        ldr: f64,
        offered_load_kbps: f64,
        seed: u64,
    ) -> Scenario {
        debug_assert!(ldr > 0.0 && ldr <= 1.0, "ldr {ldr} out of range");
        Scenario {
            policy,
            topology,
            topology_name: name.to_owned(),
            seed,
            offered_load_kbps,
            warmup_s: DEFAULT_WARMUP_S,
            measurement_s: DEFAULT_MEASUREMENT_S,
            traffic_mode: TrafficMode::Periodic,
            request_bytes: message::REQUEST_BYTES,
            ack_bytes: message::ACK_BYTES,
            max_retransmit: message::MAX_RETRANSMIT,
            cc: CcParams::default(),
            radio: RadioParams {
                ldr,
                ..RadioParams::default()
            },
            mac: MacParams::default(),
            record_trace: false,
        }
    }
}
