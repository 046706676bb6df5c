//! Event loop, clock, deterministic RNG streams, traffic generation and
//! metrics collection.

pub mod event;
pub mod metrics;
pub mod rng;
pub mod scenario;
pub mod sim;
pub mod time;
pub mod traffic;
pub mod trace;
