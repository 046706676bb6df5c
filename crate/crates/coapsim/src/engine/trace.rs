//! Optional per-exchange event trace for debugging and cross-checks.

use crate::engine::time::SimTime;
use crate::message::ExchangeId;
use crate::topology::NodeId;

#[derive(Clone, Copy, PartialEq, Debug)]
pub enum TraceKind {
    /// Request handed to the endpoint queue.
    Submit,
    /// Request left the queue and went on the wire for the first time;
    /// carries the timeout the exchange started with.
    TxStart { rto_init_s: f64 },
    /// Retransmission number `count - 1` with the new timeout.
    Retx { count: u32, rto_s: f64 },
    /// Matching ACK consumed; the exchange is complete.
    AckRx { count: u32, rtt_s: f64 },
    /// Retransmissions exhausted.
    Fail,
    /// ACK that matched no in-flight exchange.
    StaleAck,
    /// Request arrived at the sink.
    SinkRx { duplicate: bool },
}

#[derive(Clone, Copy, PartialEq, Debug)]
pub struct TraceEvent {
    pub time: SimTime,
    pub node: NodeId,
    pub exchange: ExchangeId,
    pub kind: TraceKind,
}

impl TraceEvent {
    /// One-line structured rendering, newline-delimited by the caller.
    pub fn render(&self) -> String {
        let (kind, detail) = match self.kind {
            TraceKind::Submit => ("submit", String::new()),
            TraceKind::TxStart { rto_init_s } => ("tx_start", format!(" rto_init={rto_init_s}")),
            TraceKind::Retx { count, rto_s } => ("retx", format!(" count={count} rto={rto_s}")),
            TraceKind::AckRx { count, rtt_s } => ("ack_rx", format!(" count={count} rtt={rtt_s}")),
            TraceKind::Fail => ("fail", String::new()),
            TraceKind::StaleAck => ("stale_ack", String::new()),
            TraceKind::SinkRx { duplicate } => ("sink_rx", format!(" duplicate={duplicate}")),
        };
        format!(
            "t={} node={} exchange={} kind={kind}{detail}",
            self.time, self.node, self.exchange.0
        )
    }
}
