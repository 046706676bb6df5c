//! Discrete-event simulator for CoAP congestion control over lossy
//! low-power radio meshes.
//!
//! The crate is organized around a single-threaded event loop
//! ([`engine::Sim`]) that drives three protocol layers:
//!
//! * [`cc`]: pluggable retransmission-timeout policies (default CoAP
//!   binary exponential backoff, CoCoA, CoCoA+),
//! * [`message`]: confirmable request/ACK exchanges with NSTART gating
//!   and retransmission bookkeeping,
//! * [`mac`]: a contention MAC with bounded buffers over a unit-disk
//!   radio with an interference range and per-link loss.
//!
//! Everything is deterministic for a given scenario seed: the event
//! queue is totally ordered, all randomness comes from purpose-split
//! [`engine::rng::RngStream`]s, and time is integer nanoseconds.

pub mod cc;
pub mod engine;
pub mod mac;
pub mod message;
pub mod oracle;
pub mod topology;

pub use engine::metrics::MetricsRecord;
pub use engine::scenario::{Scenario, TrafficMode};
pub use engine::sim::{Sim, SimError, SimOutput};
pub use engine::time::SimTime;
pub use cc::PolicyKind;
pub use topology::{NodeId, Role, Topology, TopologyKind};
