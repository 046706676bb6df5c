//! Retransmission-timeout policies for confirmable exchanges.
//!
//! Three policies share one state type:
//!
//! * [`PolicyKind::DefaultCoap`]: no RTT estimation; every exchange
//!   draws a fresh timeout uniformly from `[2 s, 3 s)` and doubles it on
//!   every retransmission.
//! * [`PolicyKind::Cocoa`]: two RTT estimators per destination
//!   endpoint. A *strong* estimator learns from exchanges acknowledged
//!   on the first transmission, a *weak* one from exchanges that needed
//!   one or two retransmissions. Each accepted sample blends the
//!   estimator's timeout into the running overall RTO.
//! * [`PolicyKind::CocoaPlus`]: CoCoA plus a variable backoff factor
//!   (plain doubling only for mid-range timeouts, faster growth for
//!   tiny ones, slower for huge ones) and aging of overall estimates
//!   that sit idle above the base timeout.

use std::fmt;

use crate::engine::rng::RngStream;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum PolicyKind {
    DefaultCoap,
    Cocoa,
    CocoaPlus,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [
        PolicyKind::DefaultCoap,
        PolicyKind::Cocoa,
        PolicyKind::CocoaPlus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::DefaultCoap => "default_coap",
            PolicyKind::Cocoa => "cocoa",
            PolicyKind::CocoaPlus => "cocoa_plus",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "default_coap" => Ok(PolicyKind::DefaultCoap),
            "cocoa" => Ok(PolicyKind::Cocoa),
            "cocoa_plus" => Ok(PolicyKind::CocoaPlus),
            other => Err(format!(
                "unknown policy {other:?} (expected default_coap, cocoa or cocoa_plus)"
            )),
        }
    }
}

/// Tunables shared by all policies. Defaults reproduce the standard
/// parameterization; everything is overridable from scenario config.
#[derive(Clone, Copy, Debug)]
pub struct CcParams {
    /// Smoothed-RTT gain for repeat samples.
    pub alpha: f64,
    /// RTT-variance gain for repeat samples.
    pub beta: f64,
    /// Variance multiplier of the strong estimator's RTO.
    pub k_strong: f64,
    /// Variance multiplier of the weak estimator's RTO.
    pub k_weak: f64,
    /// Base RTO: initial overall estimate, lower bound of the default
    /// policy's draw, and the value aged estimates decay toward.
    pub rto_base_s: f64,
    /// Exclusive upper bound of the default policy's initial draw.
    pub rto_default_max_s: f64,
    /// Weight of the fresh estimator RTO when blending into the overall.
    pub blend_weight: f64,
    /// Highest transmission count that still yields a weak sample.
    pub weak_max_tx: u32,
    /// Idle time after which an elevated overall estimate is aged.
    pub aging_idle_s: f64,
    /// Per-exchange RTO clamp.
    pub rto_floor_s: f64,
    pub rto_ceiling_s: f64,
    /// Spread adaptive initial RTOs uniformly over `[rto, 1.5 rto)`.
    /// Off by default; the default CoAP policy always dithers.
    pub dither_initial_rto: bool,
}

impl Default for CcParams {
    fn default() -> Self {
        CcParams {
            alpha: 0.25,
            beta: 0.125,
            k_strong: 4.0,
            k_weak: 1.0,
            rto_base_s: 2.0,
            rto_default_max_s: 3.0,
            blend_weight: 0.5,
            weak_max_tx: 3,
            aging_idle_s: 30.0,
            rto_floor_s: 0.1,
            rto_ceiling_s: 60.0,
            dither_initial_rto: false,
        }
    }
}

impl CcParams {
    pub fn clamp_rto(&self, rto_s: f64) -> f64 {
        rto_s.clamp(self.rto_floor_s, self.rto_ceiling_s)
    }
}

#[derive(thiserror::Error, Debug, PartialEq)]
pub enum CcError {
    #[error("non-positive RTT sample {rtt_s}s")]
    NonPositiveRtt { rtt_s: f64 },
}

/// One exponentially smoothed RTT estimator.
#[derive(Clone, Debug)]
pub struct Estimator {
    srtt_s: f64,
    rttvar_s: f64,
    k: f64,
    initialized: bool,
}

impl Estimator {
    fn new(k: f64) -> Self {
        Estimator {
            srtt_s: 0.0,
            rttvar_s: 0.0,
            k,
            initialized: false,
        }
    }

    pub fn initialized(&self) -> bool {
        self.initialized
    }

    pub fn srtt_s(&self) -> Option<f64> {
        self.initialized.then_some(self.srtt_s)
    }

    pub fn rttvar_s(&self) -> Option<f64> {
        self.initialized.then_some(self.rttvar_s)
    }

    /// Feeds one RTT measurement and returns this estimator's RTO.
    /// The variance uses the previous smoothed RTT, so it is updated
    /// first.
    fn observe(&mut self, rtt_s: f64, alpha: f64, beta: f64) -> f64 {
        if !self.initialized {
            self.srtt_s = rtt_s;
            self.rttvar_s = rtt_s / 2.0;
            self.initialized = true;
        } else {
            self.rttvar_s = (1.0 - beta) * self.rttvar_s + beta * (self.srtt_s - rtt_s).abs();
            self.srtt_s = (1.0 - alpha) * self.srtt_s + alpha * rtt_s;
        }
        self.srtt_s + self.k * self.rttvar_s
    }
}

/// Inputs to [`CcState::backoff`]: the timeout being extended and the
/// exchange's very first timeout (the variable factor branches on it).
#[derive(Clone, Copy, Debug)]
pub struct BackoffInputs {
    pub rto_previous_s: f64,
    pub rto_init_s: f64,
}

/// Backoff multiplier applied on retransmission. Binary exponential for
/// the non-adaptive policies; CoCoA+ varies it with the exchange's
/// initial timeout so small RTOs still make all retries within a
/// sensible window and already-large RTOs do not explode.
pub fn backoff_factor(policy: PolicyKind, rto_init_s: f64) -> f64 {
    match policy {
        PolicyKind::DefaultCoap | PolicyKind::Cocoa => 2.0,
        PolicyKind::CocoaPlus => {
            if rto_init_s < 1.0 {
                3.0
            } else if rto_init_s <= 3.0 {
                2.0
            } else {
                1.3
            }
        }
    }
}

/// Per-(source, destination endpoint) congestion-control state.
#[derive(Clone, Debug)]
pub struct CcState {
    policy: PolicyKind,
    params: CcParams,
    strong: Estimator,
    weak: Estimator,
    rto_overall_s: f64,
    last_update_s: f64,
    rng: RngStream,
}

impl CcState {
    pub fn new(policy: PolicyKind, seed: u64) -> Self {
        CcState::with_params(policy, CcParams::default(), RngStream::from_seed(seed))
    }

    pub fn with_params(policy: PolicyKind, params: CcParams, rng: RngStream) -> Self {
        CcState {
            policy,
            strong: Estimator::new(params.k_strong),
            weak: Estimator::new(params.k_weak),
            rto_overall_s: params.rto_base_s,
            last_update_s: 0.0,
            rng,
            params,
        }
    }

    pub fn policy(&self) -> PolicyKind {
        self.policy
    }

    pub fn params(&self) -> &CcParams {
        &self.params
    }

    pub fn rto_overall_s(&self) -> f64 {
        self.rto_overall_s
    }

    pub fn last_update_s(&self) -> f64 {
        self.last_update_s
    }

    pub fn strong(&self) -> &Estimator {
        &self.strong
    }

    pub fn weak(&self) -> &Estimator {
        &self.weak
    }

    /// Timeout for a new exchange's first transmission, clamped to the
    /// configured floor/ceiling.
    ///
    /// The default policy draws uniformly from the base window. The
    /// adaptive policies hand out the overall estimate; CoCoA+ first
    /// ages it if it has sat unused above the base for too long.
    pub fn initial_rto(&mut self, now_s: f64) -> f64 {
        let rto = match self.policy {
            PolicyKind::DefaultCoap => self
                .rng
                .uniform(self.params.rto_base_s, self.params.rto_default_max_s),
            PolicyKind::Cocoa => self.maybe_dither(self.rto_overall_s),
            PolicyKind::CocoaPlus => {
                self.apply_aging(now_s);
                self.maybe_dither(self.rto_overall_s)
            }
        };
        self.params.clamp_rto(rto)
    }

    fn maybe_dither(&mut self, rto_s: f64) -> f64 {
        if self.params.dither_initial_rto {
            rto_s * self.rng.uniform(1.0, 1.5)
        } else {
            rto_s
        }
    }

    /// Timeout for the next retransmission, clamped. Pure with respect
    /// to the estimator state.
    pub fn backoff(&self, inputs: BackoffInputs) -> f64 {
        let factor = backoff_factor(self.policy, inputs.rto_init_s);
        self.params.clamp_rto(inputs.rto_previous_s * factor)
    }

    /// Feeds back the RTT of an acknowledged exchange.
    ///
    /// `transmission_count` is how many times the request went out; the
    /// RTT is always measured from the first transmission. A count of 1
    /// updates the strong estimator, counts up to `weak_max_tx` update
    /// the weak one, and anything beyond is discarded because the
    /// measurement cannot be attributed to a specific transmission.
    pub fn on_rtt_sample(
        &mut self,
        rtt_s: f64,
        transmission_count: u32,
        now_s: f64,
    ) -> Result<(), CcError> {
        if rtt_s <= 0.0 {
            return Err(CcError::NonPositiveRtt { rtt_s });
        }
        debug_assert!(transmission_count >= 1);
        debug_assert!(now_s >= self.last_update_s, "time went backwards");
        if self.policy == PolicyKind::DefaultCoap {
            return Ok(());
        }
        let rto_x = if transmission_count == 1 {
            self.strong.observe(rtt_s, self.params.alpha, self.params.beta)
        } else if transmission_count <= self.params.weak_max_tx {
            self.weak.observe(rtt_s, self.params.alpha, self.params.beta)
        } else {
            return Ok(());
        };
        self.rto_overall_s = self.params.blend_weight * rto_x
            + (1.0 - self.params.blend_weight) * self.rto_overall_s;
        self.last_update_s = now_s;
        Ok(())
    }

    /// Decays an overall estimate that has sat idle above the base RTO.
    /// Only CoCoA+ ages; the call is a no-op for the other policies.
    /// Idempotent within one idle window because it refreshes
    /// `last_update`.
    pub fn apply_aging(&mut self, now_s: f64) {
        if self.policy != PolicyKind::CocoaPlus {
            return;
        }
        if self.rto_overall_s > self.params.rto_base_s
            && now_s - self.last_update_s > self.params.aging_idle_s
        {
            self.rto_overall_s = (self.params.rto_base_s + self.rto_overall_s) / 2.0;
            self.last_update_s = now_s;
        }
    }
}
