//! Straight-line reference evaluator for the adaptive-RTO recurrences.
//!
//! This module deliberately does not reuse any code from [`crate::cc`]:
//! the update rules are spelled out inline over plain local variables so
//! that trace replays cross-check the policy implementation against an
//! independently written evaluator. Kept out of `#[cfg(test)]` because
//! the CLI exposes the same cross-check as a runtime command.

use crate::cc::{CcParams, PolicyKind};

/// One step of a replayed exchange history.
#[derive(Clone, Copy, Debug)]
pub enum TraceStep {
    /// An RTT measurement fed back after an ACK, together with how many
    /// times the request had been transmitted and the clock time.
    Sample {
        rtt_s: f64,
        transmission_count: u32,
        now_s: f64,
    },
    /// A new exchange asking for its initial RTO (this is the moment
    /// CoCoA+ ages an idle estimate).
    InitialRto { now_s: f64 },
}

/// Replays `steps` and returns the overall RTO after every step.
///
/// Only the deterministic policies are meaningful here: the default
/// CoAP policy keeps no estimator state, so its trajectory is flat at
/// the base RTO.
pub fn reference_rto_trajectory(
    policy: PolicyKind,
    params: &CcParams,
    steps: &[TraceStep],
) -> Vec<f64> {
    let mut strong_srtt = 0.0_f64;
    let mut strong_rttvar = 0.0_f64;
    let mut strong_seen = false;
    let mut weak_srtt = 0.0_f64;
    let mut weak_rttvar = 0.0_f64;
    let mut weak_seen = false;
    let mut overall = params.rto_base_s;
    let mut last_update = 0.0_f64;

    let mut out = Vec::with_capacity(steps.len());
    for step in steps {
        match *step {
            TraceStep::Sample {
                rtt_s,
                transmission_count,
                now_s,
            } => {
                if policy == PolicyKind::DefaultCoap {
                    out.push(overall);
                    continue;
                }
                if transmission_count == 1 {
                    if !strong_seen {
                        strong_srtt = rtt_s;
                        strong_rttvar = rtt_s / 2.0;
                        strong_seen = true;
                    } else {
                        strong_rttvar = (1.0 - params.beta) * strong_rttvar
                            + params.beta * (strong_srtt - rtt_s).abs();
                        strong_srtt = (1.0 - params.alpha) * strong_srtt + params.alpha * rtt_s;
                    }
                    let rto_strong = strong_srtt + params.k_strong * strong_rttvar;
                    overall = params.blend_weight * rto_strong
                        + (1.0 - params.blend_weight) * overall;
                    last_update = now_s;
                } else if transmission_count >= 2 && transmission_count <= params.weak_max_tx {
                    if !weak_seen {
                        weak_srtt = rtt_s;
                        weak_rttvar = rtt_s / 2.0;
                        weak_seen = true;
                    } else {
                        weak_rttvar = (1.0 - params.beta) * weak_rttvar
                            + params.beta * (weak_srtt - rtt_s).abs();
                        weak_srtt = (1.0 - params.alpha) * weak_srtt + params.alpha * rtt_s;
                    }
                    let rto_weak = weak_srtt + params.k_weak * weak_rttvar;
                    overall =
                        params.blend_weight * rto_weak + (1.0 - params.blend_weight) * overall;
                    last_update = now_s;
                }
                // Samples past the weak limit carry no usable timing
                // information and leave the state untouched.
                out.push(overall);
            }
            TraceStep::InitialRto { now_s } => {
                if policy == PolicyKind::CocoaPlus
                    && overall > params.rto_base_s
                    && now_s - last_update > params.aging_idle_s
                {
                    overall = (params.rto_base_s + overall) / 2.0;
                    last_update = now_s;
                }
                out.push(overall);
            }
        }
    }
    out
}
