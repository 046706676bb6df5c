//! Cross-check of the runtime policy state against the straight-line
//! reference evaluator on randomized traces.

use coapsim::cc::{CcParams, CcState, PolicyKind};
use coapsim::engine::rng::{Purpose, RngStream};
use coapsim::oracle::{reference_rto_trajectory, TraceStep};

#[derive(Clone, Copy, Debug)]
pub struct OracleReport {
    pub traces: usize,
    pub steps: usize,
    pub max_abs_err_s: f64,
    pub mismatches: usize,
}

impl OracleReport {
    pub fn passed(&self, tolerance_s: f64) -> bool {
        self.mismatches == 0 && self.max_abs_err_s <= tolerance_s
    }
}

/// Draws a trace of RTT samples and fresh-exchange timeouts: strong and
/// weak samples mixed with idle gaps long enough to trigger aging.
fn random_trace(rng: &mut RngStream) -> Vec<TraceStep> {
    let len = 1 + (rng.next_u64() % 40) as usize;
    let mut now_s = 0.0;
    let mut steps = Vec::with_capacity(len);
    for _ in 0..len {
        now_s += rng.uniform(0.05, 40.0);
        if rng.bernoulli(0.7) {
            let transmission_count = match rng.next_u64() % 10 {
                0..=5 => 1,
                6..=7 => 2,
                8 => 3,
                _ => 4, // past the weak window: must be ignored
            };
            steps.push(TraceStep::Sample {
                rtt_s: rng.uniform(0.01, 5.0),
                transmission_count,
                now_s,
            });
        } else {
            steps.push(TraceStep::InitialRto { now_s });
        }
    }
    steps
}

/// Replays `traces` random traces through every policy and compares the
/// evolving RTO state against the reference at each step.
pub fn replay_random_traces(traces: usize, seed: u64, tolerance_s: f64) -> OracleReport {
    let params = CcParams::default();
    let mut gen = RngStream::for_node(seed, 0, Purpose::Traffic);
    let mut report = OracleReport {
        traces: 0,
        steps: 0,
        max_abs_err_s: 0.0,
        mismatches: 0,
    };
    for trace_index in 0..traces {
        let policy = PolicyKind::ALL[trace_index % PolicyKind::ALL.len()];
        let steps = random_trace(&mut gen);
        let expected = reference_rto_trajectory(policy, &params, &steps);

        let mut state = CcState::with_params(
            policy,
            params,
            RngStream::for_node(seed, trace_index as u16, Purpose::CcRto),
        );
        report.traces += 1;
        for (step, want) in steps.iter().zip(&expected) {
            match *step {
                TraceStep::Sample {
                    rtt_s,
                    transmission_count,
                    now_s,
                } => state
                    .on_rtt_sample(rtt_s, transmission_count, now_s)
                    .expect("positive rtt"),
                TraceStep::InitialRto { now_s } => {
                    state.initial_rto(now_s);
                }
            }
            let err = (state.rto_overall_s() - want).abs();
            report.steps += 1;
            if err > report.max_abs_err_s {
                report.max_abs_err_s = err;
            }
            if err > tolerance_s {
                report.mismatches += 1;
            }
        }
    }
    report
}
