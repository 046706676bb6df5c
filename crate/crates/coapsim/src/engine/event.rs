//! Totally ordered event queue.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::engine::time::SimTime;
use crate::message::ExchangeId;
use crate::topology::NodeId;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum EventKind {
    /// A client submits its next periodic request.
    AppSend { node: NodeId },
    /// A node carrier-senses and possibly starts transmitting.
    MacAttempt { node: NodeId },
    /// A node's transmission finishes; reception is resolved.
    TxEnd { node: NodeId },
    /// A retransmission deadline. Fires only if the exchange is still
    /// in flight with the same transmission count it was armed with.
    RtoExpiry {
        exchange: ExchangeId,
        armed_tx_count: u32,
    },
    WarmupEnd,
    SimEnd,
}

#[derive(Clone, Copy, Debug)]
pub struct Event {
    pub time: SimTime,
    pub seq: u64,
    pub kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.seq == other.seq
    }
}

impl Eq for Event {}

impl Ord for Event {
    /// Later events sort lower so the max-heap pops earliest first;
    /// same-time events keep scheduling order via the sequence number.
    fn cmp(&self, other: &Self) -> Ordering {
        (other.time, other.seq).cmp(&(self.time, self.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Default, Debug)]
pub struct EventQueue {
    heap: BinaryHeap<Event>,
    next_seq: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        EventQueue {
            heap: BinaryHeap::with_capacity(1024),
            next_seq: 0,
        }
    }

    pub fn schedule(&mut self, time: SimTime, kind: EventKind) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Event { time, seq, kind });
    }

    pub fn pop(&mut self) -> Option<Event> {
        self.heap.pop()
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}
