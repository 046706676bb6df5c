//! TOML sweep configuration.
//!
//! A config names the sweep axes (policies, topologies, link delivery
//! ratios, offered loads, seeds) and may override simulation parameters.
//! Unknown keys are rejected so typos fail loudly instead of silently
//! running the defaults.

use anyhow::{bail, Context, Result};
use coapsim::cc::{CcParams, PolicyKind};
use coapsim::engine::scenario::{Scenario, TrafficMode};
use coapsim::mac::{LdrMode, MacParams, RadioParams};
use coapsim::topology::TopologyKind;
use serde::Deserialize;

#[derive(Deserialize, Clone, Debug)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(vs) => vs,
        }
    }
}

#[derive(Deserialize, Clone, Debug, Default)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    policy: Option<OneOrMany<String>>,
    topology: Option<OneOrMany<String>>,
    ldr: Option<OneOrMany<f64>>,
    loads_kbps: Option<Vec<f64>>,
    seeds: Option<Vec<u64>>,
    warmup_s: Option<f64>,
    measurement_s: Option<f64>,
    traffic: Option<String>,
    request_bytes: Option<u32>,
    ack_bytes: Option<u32>,
    max_retransmit: Option<u32>,
    out: Option<String>,
    cc: Option<CcOverrides>,
    radio: Option<RadioOverrides>,
    mac: Option<MacOverrides>,
}

#[derive(Deserialize, Clone, Debug, Default)]
#[serde(deny_unknown_fields)]
struct CcOverrides {
    alpha: Option<f64>,
    beta: Option<f64>,
    k_strong: Option<f64>,
    k_weak: Option<f64>,
    rto_base_s: Option<f64>,
    rto_default_max_s: Option<f64>,
    blend_weight: Option<f64>,
    weak_max_tx: Option<u32>,
    aging_idle_s: Option<f64>,
    rto_floor_s: Option<f64>,
    rto_ceiling_s: Option<f64>,
    dither_initial_rto: Option<bool>,
}

#[derive(Deserialize, Clone, Debug, Default)]
#[serde(deny_unknown_fields)]
struct RadioOverrides {
    tx_range_m: Option<f64>,
    interference_range_m: Option<f64>,
    bitrate_bps: Option<f64>,
    ldr_mode: Option<String>,
}

#[derive(Deserialize, Clone, Debug, Default)]
#[serde(deny_unknown_fields)]
struct MacOverrides {
    buffer_frames: Option<usize>,
    csma_retries: Option<u32>,
    csma_backoff_min_s: Option<f64>,
    csma_backoff_max_s: Option<f64>,
    link_retries: Option<u32>,
    link_overhead_bytes: Option<u32>,
    wakeup_max_s: Option<f64>,
}

/// Validated sweep description with every default filled in.
#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub policies: Vec<PolicyKind>,
    pub topologies: Vec<TopologyKind>,
    pub ldrs: Vec<f64>,
    pub loads_kbps: Vec<f64>,
    pub seeds: Vec<u64>,
    pub warmup_s: f64,
    pub measurement_s: f64,
    pub traffic_mode: TrafficMode,
    pub request_bytes: u32,
    pub ack_bytes: u32,
    pub max_retransmit: u32,
    pub out: Option<String>,
    pub cc: CcParams,
    pub radio_template: RadioParams,
    pub mac: MacParams,
}

pub const MIN_LOAD_KBPS: f64 = 0.1;
pub const MAX_LOAD_KBPS: f64 = 20.0;

impl Default for SweepConfig {
    /// The full evaluation matrix: every policy and topology, the three
    /// link delivery ratios, 1..10 kbps, five seeds.
    fn default() -> Self {
        SweepConfig {
            policies: PolicyKind::ALL.to_vec(),
            topologies: TopologyKind::ALL.to_vec(),
            ldrs: vec![1.0, 0.5, 0.25],
            loads_kbps: (1..=10).map(f64::from).collect(),
            seeds: (1..=5).collect(),
            warmup_s: 60.0,
            measurement_s: 900.0,
            traffic_mode: TrafficMode::Periodic,
            request_bytes: 71,
            ack_bytes: 11,
            max_retransmit: 4,
            out: None,
            cc: CcParams::default(),
            radio_template: RadioParams::default(),
            mac: MacParams::default(),
        }
    }
}

impl SweepConfig {
    pub fn parse(text: &str) -> Result<SweepConfig> {
        let raw: RawConfig = toml::from_str(text).context("invalid sweep config")?;
        SweepConfig::from_raw(raw)
    }

    pub fn cell_count(&self) -> usize {
        self.policies.len()
            * self.topologies.len()
            * self.ldrs.len()
            * self.loads_kbps.len()
            * self.seeds.len()
    }

    /// Concrete scenario for one sweep cell.
    pub fn scenario(
        &self,
        policy: PolicyKind,
        topology: TopologyKind,
        ldr: f64,
        offered_kbps: f64,
        seed: u64,
    ) -> Scenario {
        let mut sc = Scenario::new(policy, topology, ldr, offered_kbps, seed);
        sc.warmup_s = self.warmup_s;
        sc.measurement_s = self.measurement_s;
        sc.traffic_mode = self.traffic_mode;
        sc.request_bytes = self.request_bytes;
        sc.ack_bytes = self.ack_bytes;
        sc.max_retransmit = self.max_retransmit;
        sc.cc = self.cc;
        sc.radio = RadioParams {
            ldr,
            ..self.radio_template
        };
        sc.mac = self.mac;
        sc
    }

    fn from_raw(raw: RawConfig) -> Result<SweepConfig> {
        let defaults = SweepConfig::default();

        let policies = match raw.policy {
            None => defaults.policies,
            Some(p) => parse_each(p.into_vec(), "policy")?,
        };
        let topologies = match raw.topology {
            None => defaults.topologies,
            Some(t) => parse_each(t.into_vec(), "topology")?,
        };
        let ldrs = raw.ldr.map_or(vec![1.0], OneOrMany::into_vec);
        let loads_kbps = raw.loads_kbps.unwrap_or(defaults.loads_kbps);
        let seeds = raw.seeds.unwrap_or(defaults.seeds);

        if policies.is_empty() || topologies.is_empty() {
            bail!("policy and topology lists must not be empty");
        }
        if ldrs.is_empty() || loads_kbps.is_empty() || seeds.is_empty() {
            bail!("ldr, loads_kbps and seeds lists must not be empty");
        }
        for &ldr in &ldrs {
            if !(ldr > 0.0 && ldr <= 1.0) {
                bail!("ldr = {ldr} out of range: must be in (0, 1]");
            }
        }
        for &load in &loads_kbps {
            if !(MIN_LOAD_KBPS..=MAX_LOAD_KBPS).contains(&load) {
                bail!(
                    "loads_kbps = {load} out of range: must be in [{MIN_LOAD_KBPS}, {MAX_LOAD_KBPS}]"
                );
            }
        }

        let warmup_s = raw.warmup_s.unwrap_or(defaults.warmup_s);
        let measurement_s = raw.measurement_s.unwrap_or(defaults.measurement_s);
        if warmup_s < 0.0 {
            bail!("warmup_s = {warmup_s} must not be negative");
        }
        if measurement_s <= 0.0 {
            bail!("measurement_s = {measurement_s} must be positive");
        }

        let traffic_mode = match raw.traffic.as_deref() {
            None => TrafficMode::Periodic,
            Some("periodic") => TrafficMode::Periodic,
            Some("poisson") => TrafficMode::Poisson,
            Some(other) => bail!("unknown traffic mode {other:?} (expected periodic or poisson)"),
        };

        let request_bytes = raw.request_bytes.unwrap_or(defaults.request_bytes);
        let ack_bytes = raw.ack_bytes.unwrap_or(defaults.ack_bytes);
        if request_bytes == 0 || ack_bytes == 0 {
            bail!("request_bytes and ack_bytes must be positive");
        }
        let max_retransmit = raw.max_retransmit.unwrap_or(defaults.max_retransmit);

        let cc = apply_cc(defaults.cc, raw.cc.unwrap_or_default())?;
        let radio_template = apply_radio(defaults.radio_template, raw.radio.unwrap_or_default())?;
        let mac = apply_mac(defaults.mac, raw.mac.unwrap_or_default())?;

        Ok(SweepConfig {
            policies,
            topologies,
            ldrs,
            loads_kbps,
            seeds,
            warmup_s,
            measurement_s,
            traffic_mode,
            request_bytes,
            ack_bytes,
            max_retransmit,
            out: raw.out,
            cc,
            radio_template,
            mac,
        })
    }
}

fn parse_each<T>(items: Vec<String>, what: &str) -> Result<Vec<T>>
where
    T: std::str::FromStr<Err = String>,
{
    let mut out = Vec::with_capacity(items.len());
    for item in items {
        out.push(item.parse::<T>().map_err(|e| anyhow::anyhow!("{what}: {e}"))?);
    }
    Ok(out)
}

fn apply_cc(mut params: CcParams, o: CcOverrides) -> Result<CcParams> {
    if let Some(v) = o.alpha {
        params.alpha = v;
    }
    if let Some(v) = o.beta {
        params.beta = v;
    }
    if let Some(v) = o.k_strong {
        params.k_strong = v;
    }
    if let Some(v) = o.k_weak {
        params.k_weak = v;
    }
    if let Some(v) = o.rto_base_s {
        params.rto_base_s = v;
    }
    if let Some(v) = o.rto_default_max_s {
        params.rto_default_max_s = v;
    }
    if let Some(v) = o.blend_weight {
        params.blend_weight = v;
    }
    if let Some(v) = o.weak_max_tx {
        params.weak_max_tx = v;
    }
    if let Some(v) = o.aging_idle_s {
        params.aging_idle_s = v;
    }
    if let Some(v) = o.rto_floor_s {
        params.rto_floor_s = v;
    }
    if let Some(v) = o.rto_ceiling_s {
        params.rto_ceiling_s = v;
    }
    if let Some(v) = o.dither_initial_rto {
        params.dither_initial_rto = v;
    }
    if !(params.alpha > 0.0 && params.alpha < 1.0) || !(params.beta > 0.0 && params.beta < 1.0) {
        bail!("cc.alpha and cc.beta must lie in (0, 1)");
    }
    if !(0.0..=1.0).contains(&params.blend_weight) {
        bail!("cc.blend_weight must lie in [0, 1]");
    }
    if params.k_strong < 0.0 || params.k_weak < 0.0 {
        bail!("cc.k_strong and cc.k_weak must not be negative");
    }
    if params.rto_floor_s <= 0.0 || params.rto_floor_s >= params.rto_ceiling_s {
        bail!("cc RTO clamp requires 0 < rto_floor_s < rto_ceiling_s");
    }
    if params.rto_base_s <= 0.0 || params.rto_default_max_s < params.rto_base_s {
        bail!("cc base window requires 0 < rto_base_s <= rto_default_max_s");
    }
    Ok(params)
}

fn apply_radio(mut params: RadioParams, o: RadioOverrides) -> Result<RadioParams> {
    if let Some(v) = o.tx_range_m {
        params.tx_range_m = v;
    }
    if let Some(v) = o.interference_range_m {
        params.interference_range_m = v;
    }
    if let Some(v) = o.bitrate_bps {
        params.bitrate_bps = v;
    }
    if let Some(mode) = o.ldr_mode.as_deref() {
        params.ldr_mode = match mode {
            "single" => LdrMode::Single,
            "compound" => LdrMode::Compound,
            other => bail!("unknown radio.ldr_mode {other:?} (expected single or compound)"),
        };
    }
    if params.tx_range_m <= 0.0 {
        bail!("radio.tx_range_m must be positive");
    }
    if params.interference_range_m < params.tx_range_m {
        bail!("radio.interference_range_m must be at least tx_range_m");
    }
    if params.bitrate_bps <= 0.0 {
        bail!("radio.bitrate_bps must be positive");
    }
    Ok(params)
}

fn apply_mac(mut params: MacParams, o: MacOverrides) -> Result<MacParams> {
    if let Some(v) = o.buffer_frames {
        params.buffer_frames = v;
    }
    if let Some(v) = o.csma_retries {
        params.csma_retries = v;
    }
    if let Some(v) = o.csma_backoff_min_s {
        params.csma_backoff_min_s = v;
    }
    if let Some(v) = o.csma_backoff_max_s {
        params.csma_backoff_max_s = v;
    }
    if let Some(v) = o.link_retries {
        params.link_retries = v;
    }
    if let Some(v) = o.link_overhead_bytes {
        params.link_overhead_bytes = v;
    }
    if let Some(v) = o.wakeup_max_s {
        params.wakeup_max_s = v;
    }
    if params.buffer_frames == 0 {
        bail!("mac.buffer_frames must be at least 1");
    }
    if params.csma_backoff_min_s < 0.0 || params.csma_backoff_max_s < params.csma_backoff_min_s {
        bail!("mac CSMA backoff window requires 0 <= min <= max");
    }
    if params.wakeup_max_s < 0.0 {
        bail!("mac.wakeup_max_s must not be negative");
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = SweepConfig::parse("policy = \"cocoa\"\ntopology = \"grid6\"\n").unwrap();
        assert_eq!(cfg.policies, vec![PolicyKind::Cocoa]);
        assert_eq!(cfg.topologies, vec![TopologyKind::Grid6]);
        assert_eq!(cfg.ldrs, vec![1.0]);
        assert_eq!(cfg.loads_kbps.len(), 10);
        assert_eq!(cfg.seeds, vec![1, 2, 3, 4, 5]);
        assert_eq!(cfg.cell_count(), 50);
    }

    #[test]
    fn empty_config_sweeps_everything_at_clean_links() {
        let cfg = SweepConfig::parse("").unwrap();
        // One ldr (the clean-link default), everything else full width.
        assert_eq!(cfg.cell_count(), 3 * 4 * 10 * 5);
        let full = SweepConfig::default();
        assert_eq!(full.cell_count(), 1800);
    }

    #[test]
    fn lists_and_scalars_both_accepted() {
        let cfg = SweepConfig::parse(
            "policy = [\"cocoa\", \"cocoa_plus\"]\ntopology = \"chain\"\nldr = [1.0, 0.5]\n",
        )
        .unwrap();
        assert_eq!(cfg.policies.len(), 2);
        assert_eq!(cfg.ldrs, vec![1.0, 0.5]);
    }

    #[test]
    fn ldr_out_of_range_is_rejected() {
        let err = SweepConfig::parse("ldr = 1.7\n").unwrap_err();
        assert!(err.to_string().contains("out of range"), "{err}");
    }

    #[test]
    fn unknown_topology_is_rejected() {
        let err = SweepConfig::parse("topology = \"grid9\"\n").unwrap_err();
        assert!(err.to_string().contains("grid9"), "{err}");
        assert!(err.to_string().contains("chain"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let err = SweepConfig::parse("polcy = \"cocoa\"\n").unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("polcy") || msg.contains("unknown field"), "{msg}");
    }

    #[test]
    fn parameter_overrides_apply() {
        let cfg = SweepConfig::parse(
            "topology = \"chain\"\n\
             measurement_s = 300.0\n\
             [cc]\n\
             dither_initial_rto = true\n\
             k_strong = 5.0\n\
             [mac]\n\
             wakeup_max_s = 0.0\n\
             [radio]\n\
             ldr_mode = \"compound\"\n",
        )
        .unwrap();
        assert_eq!(cfg.measurement_s, 300.0);
        assert!(cfg.cc.dither_initial_rto);
        assert_eq!(cfg.cc.k_strong, 5.0);
        assert_eq!(cfg.mac.wakeup_max_s, 0.0);
        assert_eq!(cfg.radio_template.ldr_mode, LdrMode::Compound);
    }

    #[test]
    fn nonsense_parameter_combinations_are_rejected() {
        assert!(SweepConfig::parse("[cc]\nalpha = 1.5\n").is_err());
        assert!(SweepConfig::parse("[cc]\nrto_floor_s = 100.0\n").is_err());
        assert!(SweepConfig::parse("[mac]\nbuffer_frames = 0\n").is_err());
        assert!(SweepConfig::parse("[radio]\ninterference_range_m = 5.0\n").is_err());
        assert!(SweepConfig::parse("loads_kbps = [50.0]\n").is_err());
        assert!(SweepConfig::parse("seeds = []\n").is_err());
        assert!(SweepConfig::parse("traffic = \"bursty\"\n").is_err());
    }

    #[test]
    fn scenario_carries_overrides_into_cells() {
        let cfg = SweepConfig::parse(
            "topology = \"chain\"\nmeasurement_s = 120.0\n[mac]\nbuffer_frames = 4\n",
        )
        .unwrap();
        let sc = cfg.scenario(PolicyKind::Cocoa, TopologyKind::Chain, 0.5, 2.0, 7);
        assert_eq!(sc.measurement_s, 120.0);
        assert_eq!(sc.mac.buffer_frames, 4);
        assert_eq!(sc.radio.ldr, 0.5);
        assert_eq!(sc.seed, 7);
    }
}
