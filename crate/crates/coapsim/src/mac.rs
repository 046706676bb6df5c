//! Contention MAC with a bounded transmit buffer over a unit-disk radio.
//!
//! Links deliver within `tx_range_m`; concurrent transmissions corrupt a
//! frame when any other transmitter sits within `interference_range_m`
//! of the receiver during its airtime. On top of that every attempt
//! passes an independent link-delivery-ratio draw. Before transmitting
//! a node carrier-senses; a busy medium defers the attempt by a short
//! random backoff, a bounded number of times. Failed deliveries are
//! retried a few times at the link layer before the frame is abandoned.
//!
//! Radio duty cycling is not modeled explicitly: its cost is folded into
//! a per-attempt wakeup delay (`wakeup_max_s`) that dominates the MAC
//! service time, the way low-power listening dominates it on real
//! hardware. Set it to zero for an always-on radio.

use crate::engine::time::SimTime;
use crate::message::Message;
use crate::topology::NodeId;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum LdrMode {
    /// One delivery draw per transmission attempt.
    Single,
    /// Separate transmit-side and receive-side draws per attempt, both
    /// at the configured ratio (compounding to ldr squared).
    Compound,
}

#[derive(Clone, Copy, Debug)]
pub struct RadioParams {
    pub tx_range_m: f64,
    pub interference_range_m: f64,
    pub bitrate_bps: f64,
    /// Link delivery ratio in `(0, 1]`.
    pub ldr: f64,
    pub ldr_mode: LdrMode,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            tx_range_m: 10.0,
            interference_range_m: 20.0,
            bitrate_bps: 250_000.0,
            ldr: 1.0,
            ldr_mode: LdrMode::Single,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct MacParams {
    /// Transmit buffer bound, counting the frame in service.
    pub buffer_frames: usize,
    /// Busy-medium deferrals allowed per frame before it is dropped.
    pub csma_retries: u32,
    pub csma_backoff_min_s: f64,
    pub csma_backoff_max_s: f64,
    /// Link-layer retransmissions after the initial attempt.
    pub link_retries: u32,
    /// Framing bytes added to every message on the air.
    pub link_overhead_bytes: u32,
    /// Upper bound of the uniform per-attempt wakeup delay standing in
    /// for radio duty cycling. Zero disables it.
    pub wakeup_max_s: f64,
}

impl Default for MacParams {
    fn default() -> Self {
        MacParams {
            buffer_frames: 8,
            csma_retries: 8,
            csma_backoff_min_s: 0.5e-3,
            csma_backoff_max_s: 2.5e-3,
            link_retries: 3,
            link_overhead_bytes: 25,
            wakeup_max_s: 0.25,
        }
    }
}

/// Seconds a frame of `frame_bytes` occupies the medium.
pub fn airtime_s(frame_bytes: u32, bitrate_bps: f64) -> f64 {
    f64::from(frame_bytes) * 8.0 / bitrate_bps
}

/// One link-layer hop of a message.
#[derive(Clone, Copy, Debug)]
pub struct Frame {
    pub message: Message,
    pub link_src: NodeId,
    pub link_dst: NodeId,
    /// Link-layer retransmissions already spent on this frame.
    pub retries_used: u32,
    /// Busy-medium deferrals already spent on this frame.
    pub senses_used: u32,
}

impl Frame {
    pub fn new(message: Message, link_src: NodeId, link_dst: NodeId) -> Self {
        Frame {
            message,
            link_src,
            link_dst,
            retries_used: 0,
            senses_used: 0,
        }
    }

    pub fn on_air_bytes(&self, params: &MacParams) -> u32 {
        self.message.size_bytes + params.link_overhead_bytes
    }
}

/// An in-progress transmission of the buffer's head frame.
#[derive(Clone, Copy, Debug)]
pub struct ActiveTx {
    pub start: SimTime,
    pub end: SimTime,
    /// Set when another transmission overlapped at the receiver.
    pub corrupted: bool,
}

#[derive(Clone, Copy, Default, Debug)]
pub struct MacCounters {
    pub enqueued: u64,
    pub delivered: u64,
    pub overflow: u64,
    pub csma_drops: u64,
    pub retry_exhausted: u64,
    pub collisions: u64,
    /// Transmissions started (every attempt, retries included).
    pub attempts: u64,
}

impl MacCounters {
    /// Frames that entered and left (or still occupy) this MAC must
    /// balance; `in_buffer` is the queue length at the time of the
    /// check.
    pub fn conserved(&self, in_buffer: usize) -> bool {
        self.enqueued
            == self.delivered
                + self.overflow
                + self.csma_drops
                + self.retry_exhausted
                + in_buffer as u64
    }
}

/// Per-node MAC: bounded FIFO of outgoing frames plus the transmission
/// in progress. Scheduling lives in the engine; this only owns state.
#[derive(Clone, Debug)]
pub struct MacState {
    buffer: std::collections::VecDeque<Frame>,
    capacity: usize,
    pub active: Option<ActiveTx>,
    /// An attempt event for this node is already in the queue.
    pub attempt_scheduled: bool,
    pub counters: MacCounters,
}

impl MacState {
    pub fn new(params: &MacParams) -> Self {
        MacState {
            buffer: std::collections::VecDeque::with_capacity(params.buffer_frames),
            capacity: params.buffer_frames,
            active: None,
            attempt_scheduled: false,
            counters: MacCounters::default(),
        }
    }

    /// Accepts a frame into the transmit buffer, or counts an overflow
    /// drop when the buffer is full. Returns whether it was accepted.
    pub fn enqueue(&mut self, frame: Frame) -> bool {
        self.counters.enqueued += 1;
        if self.buffer.len() >= self.capacity {
            self.counters.overflow += 1;
            return false;
        }
        self.buffer.push_back(frame);
        true
    }

    pub fn head(&self) -> Option<&Frame> {
        self.buffer.front()
    }

    pub fn head_mut(&mut self) -> Option<&mut Frame> {
        self.buffer.front_mut()
    }

    pub fn pop_head(&mut self) -> Option<Frame> {
        self.buffer.pop_front()
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn is_transmitting(&self) -> bool {
        self.active.is_some()
    }
}
