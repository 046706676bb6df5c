//! Confirmable message exchanges: request/ACK state machines, NSTART
//! gating per destination endpoint, message-id allocation and sink-side
//! duplicate handling.

use std::collections::VecDeque;

use crate::engine::time::SimTime;
use crate::topology::NodeId;

/// Confirmable request size on the wire (CoAP bytes, before link
/// framing) used by the constant-traffic workload.
pub const REQUEST_BYTES: u32 = 71;
/// Empty ACK size on the wire.
pub const ACK_BYTES: u32 = 11;
/// Retransmissions allowed per exchange (so at most 1 + this many
/// transmissions).
pub const MAX_RETRANSMIT: u32 = 4;
/// Outstanding exchanges allowed per (client, destination endpoint).
pub const NSTART: usize = 1;
/// Recent message ids remembered per source for duplicate detection.
pub const DEDUP_WINDOW: usize = 64;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum MessageKind {
    /// Confirmable request.
    Con,
    /// Non-confirmable message; parsed but never sent by this workload.
    Non,
    Ack,
    /// Reset; parsed but never sent by this workload.
    Rst,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ExchangeId(pub u32);

impl ExchangeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Message {
    pub kind: MessageKind,
    pub message_id: u16,
    /// Originating endpoint (the client for CONs, the sink for ACKs).
    pub source: NodeId,
    pub destination: NodeId,
    /// Total on-wire CoAP size; payload is treated as opaque.
    pub size_bytes: u32,
    pub created_at: SimTime,
    pub exchange: ExchangeId,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ExchangeState {
    /// Waiting for the endpoint's NSTART slot.
    Queued,
    /// On the wire with a retransmission deadline armed.
    InFlight,
    Acked,
    Failed,
}

/// One confirmable request from submission to ACK or failure.
#[derive(Clone, Debug)]
pub struct Exchange {
    pub id: ExchangeId,
    pub source: NodeId,
    pub destination: NodeId,
    pub message_id: u16,
    pub state: ExchangeState,
    pub submitted_at: SimTime,
    /// Times the request has been handed to the MAC (1 on first send).
    pub transmission_count: u32,
    /// Timeout assigned when the exchange left the queue; the variable
    /// backoff factor branches on it.
    pub rto_init_s: f64,
    /// Current retransmission timeout.
    pub rto_current_s: f64,
    /// First CoAP-layer send time; RTT samples measure from here.
    pub first_tx_time: Option<SimTime>,
    /// Stale-deadline guard: an expiry event only fires if it carries
    /// the transmission count it was armed with.
    pub armed_tx_count: u32,
    /// First time the request reached the sink, if it ever did.
    pub first_sink_rx: Option<SimTime>,
}

impl Exchange {
    pub fn new(
        id: ExchangeId,
        source: NodeId,
        destination: NodeId,
        message_id: u16,
        submitted_at: SimTime,
    ) -> Self {
        Exchange {
            id,
            source,
            destination,
            message_id,
            state: ExchangeState::Queued,
            submitted_at,
            transmission_count: 0,
            rto_init_s: 0.0,
            rto_current_s: 0.0,
            first_tx_time: None,
            armed_tx_count: 0,
            first_sink_rx: None,
        }
    }

    pub fn is_resolved(&self) -> bool {
        matches!(self.state, ExchangeState::Acked | ExchangeState::Failed)
    }
}

/// Client-side queue toward one destination endpoint. At most [`NSTART`]
/// exchanges are in flight; the rest wait in FIFO order.
#[derive(Clone, Debug)]
pub struct EndpointQueue {
    pub destination: NodeId,
    in_flight: Option<ExchangeId>,
    waiting: VecDeque<ExchangeId>,
    next_message_id: u16,
    /// Message ids of queued and in-flight exchanges; new allocations
    /// must skip these so concurrent-in-time exchanges stay
    /// distinguishable at the sink.
    live_ids: Vec<u16>,
}

impl EndpointQueue {
    pub fn new(destination: NodeId) -> Self {
        EndpointQueue {
            destination,
            in_flight: None,
            waiting: VecDeque::new(),
            next_message_id: 0,
            live_ids: Vec::new(),
        }
    }

    /// Monotonically incrementing id modulo 2^16, skipping ids still
    /// held by live exchanges toward this destination.
    pub fn allocate_message_id(&mut self) -> u16 {
        loop {
            let id = self.next_message_id;
            self.next_message_id = self.next_message_id.wrapping_add(1);
            if !self.live_ids.contains(&id) {
                self.live_ids.push(id);
                return id;
            }
        }
    }

    /// Registers a submitted exchange. Returns `true` when it may go in
    /// flight immediately, `false` when it has to wait for the slot.
    pub fn submit(&mut self, exchange: ExchangeId) -> bool {
        if self.in_flight.is_none() {
            self.in_flight = Some(exchange);
            true
        } else {
            self.waiting.push_back(exchange);
            false
        }
    }

    /// Releases the slot of a finished exchange and hands back the next
    /// waiting exchange, if any, which is promoted in FIFO order.
    pub fn complete(&mut self, finished: ExchangeId, message_id: u16) -> Option<ExchangeId> {
        debug_assert_eq!(self.in_flight, Some(finished), "slot/exchange mismatch");
        self.live_ids.retain(|&id| id != message_id);
        self.in_flight = self.waiting.pop_front();
        self.in_flight
    }

    pub fn in_flight(&self) -> Option<ExchangeId> {
        self.in_flight
    }

    pub fn waiting_len(&self) -> usize {
        self.waiting.len()
    }
}

/// Sink-side bookkeeping for one traffic source: a sliding window of
/// recently seen message ids so retransmitted duplicates are re-ACKed
/// without being double counted.
#[derive(Clone, Default, Debug)]
pub struct DedupWindow {
    recent: VecDeque<u16>,
}

impl DedupWindow {
    /// Records a message id; returns `true` the first time an id is
    /// seen within the window, `false` for duplicates.
    pub fn register(&mut self, message_id: u16) -> bool {
        if self.recent.contains(&message_id) {
            return false;
        }
        if self.recent.len() == DEDUP_WINDOW {
            self.recent.pop_front();
        }
        self.recent.push_back(message_id);
        true
    }
}
