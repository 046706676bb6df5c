//! Sweep execution and CSV assembly.
//!
//! Cells are expanded in a canonical order, run independently (serially
//! or on a worker pool) and written as one data row per cell plus one
//! mean-over-seeds summary row per (policy, topology, ldr, load) group.
//! Row content never depends on execution order.

use crate::config::SweepConfig;
use anyhow::{Context, Result};
use coapsim::cc::PolicyKind;
use coapsim::engine::metrics::MetricsRecord;
use coapsim::engine::sim::Sim;
use coapsim::topology::TopologyKind;
use rayon::prelude::*;

pub const CSV_HEADER: [&str; 12] = [
    "policy",
    "topology",
    "ldr",
    "offered_kbps",
    "seed",
    "pdr",
    "carried_kbps",
    "mean_delay_s",
    "p95_delay_s",
    "mac_overflows",
    "retransmissions",
    "failed_exchanges",
];

#[derive(Clone, Copy, PartialEq, Debug)]
pub struct CellKey {
    pub policy: PolicyKind,
    pub topology: TopologyKind,
    pub ldr: f64,
    pub offered_kbps: f64,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct DataRow {
    pub key: CellKey,
    /// Metrics, or the error text for a cell whose run aborted.
    pub outcome: Result<MetricsRecord, String>,
}

/// Expands the sweep matrix in canonical order: policies and topologies
/// in declaration order, delivery ratios descending (the clean 100%
/// case first), loads and seeds ascending.
pub fn expand_cells(cfg: &SweepConfig) -> Vec<CellKey> {
    let policies: Vec<PolicyKind> = PolicyKind::ALL
        .into_iter()
        .filter(|p| cfg.policies.contains(p))
        .collect();
    let topologies: Vec<TopologyKind> = TopologyKind::ALL
        .into_iter()
        .filter(|t| cfg.topologies.contains(t))
        .collect();
    let mut ldrs = cfg.ldrs.clone();
    ldrs.sort_by(|a, b| b.total_cmp(a));
    ldrs.dedup();
    let mut loads = cfg.loads_kbps.clone();
    loads.sort_by(f64::total_cmp);
    loads.dedup();
    let mut seeds = cfg.seeds.clone();
    seeds.sort_unstable();
    seeds.dedup();

    let mut cells =
        Vec::with_capacity(policies.len() * topologies.len() * ldrs.len() * loads.len() * seeds.len());
    for &policy in &policies {
        for &topology in &topologies {
            for &ldr in &ldrs {
                for &offered_kbps in &loads {
                    for &seed in &seeds {
                        cells.push(CellKey {
                            policy,
                            topology,
                            ldr,
                            offered_kbps,
                            seed,
                        });
                    }
                }
            }
        }
    }
    cells
}

fn run_one(cfg: &SweepConfig, key: CellKey) -> DataRow {
    let scenario = cfg.scenario(key.policy, key.topology, key.ldr, key.offered_kbps, key.seed);
    let outcome = Sim::new(scenario)
        .run()
        .map(|out| out.metrics)
        .map_err(|e| e.to_string());
    DataRow { key, outcome }
}

/// Runs every cell. `parallel` is the worker count; 0 runs serially on
/// the calling thread. Results are identical either way.
pub fn run_cells(cfg: &SweepConfig, cells: &[CellKey], parallel: usize) -> Result<Vec<DataRow>> {
    if parallel == 0 {
        return Ok(cells.iter().map(|&key| run_one(cfg, key)).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel)
        .build()
        .context("building worker pool")?;
    Ok(pool.install(|| cells.par_iter().map(|&key| run_one(cfg, key)).collect()))
}

/// Shortest round-tripping decimal form of a float.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Mean in member order; used for both summary rows and figure series
/// so the two always agree bit for bit.
pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn metric_cells(m: &MetricsRecord) -> [String; 7] {
    [
        fmt_f64(m.pdr),
        fmt_f64(m.carried_load_kbps),
        fmt_f64(m.mean_delay_s),
        fmt_f64(m.p95_delay_s),
        m.mac_overflows.to_string(),
        m.retransmissions.to_string(),
        m.failed_exchanges.to_string(),
    ]
}

fn key_cells(key: &CellKey, seed: &str) -> [String; 5] {
    [
        key.policy.name().to_string(),
        key.topology.name().to_string(),
        fmt_f64(key.ldr),
        fmt_f64(key.offered_kbps),
        seed.to_string(),
    ]
}

/// Values a summary row averages, in CSV column order.
fn summary_values(members: &[&MetricsRecord]) -> [f64; 7] {
    let col = |f: fn(&MetricsRecord) -> f64| -> f64 {
        let vals: Vec<f64> = members.iter().map(|m| f(m)).collect();
        mean(&vals)
    };
    [
        col(|m| m.pdr),
        col(|m| m.carried_load_kbps),
        col(|m| m.mean_delay_s),
        col(|m| m.p95_delay_s),
        col(|m| m.mac_overflows as f64),
        col(|m| m.retransmissions as f64),
        col(|m| m.failed_exchanges as f64),
    ]
}

fn same_group(a: &CellKey, b: &CellKey) -> bool {
    a.policy == b.policy
        && a.topology == b.topology
        && a.ldr == b.ldr
        && a.offered_kbps == b.offered_kbps
}

/// Renders data rows plus summary rows as one CSV document.
pub fn to_csv(rows: &[DataRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    let mut i = 0;
    while i < rows.len() {
        let mut j = i;
        while j < rows.len() && same_group(&rows[i].key, &rows[j].key) {
            j += 1;
        }
        let group = &rows[i..j];
        for row in group {
            let key = key_cells(&row.key, &row.key.seed.to_string());
            match &row.outcome {
                Ok(m) => {
                    let metrics = metric_cells(m);
                    w.write_record(key.iter().chain(metrics.iter()))?;
                }
                Err(_) => {
                    let empty = [""; 7].map(String::from);
                    w.write_record(key.iter().chain(empty.iter()))?;
                }
            }
        }
        let members: Vec<&MetricsRecord> =
            group.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
        let key = key_cells(&group[0].key, "mean");
        if members.is_empty() {
            let empty = [""; 7].map(String::from);
            w.write_record(key.iter().chain(empty.iter()))?;
        } else {
            let means = summary_values(&members).map(fmt_f64);
            w.write_record(key.iter().chain(means.iter()))?;
        }
        i = j;
    }
    let bytes = w.into_inner().context("flushing CSV")?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

/// Expand, run and render in one step.
pub fn run_sweep(cfg: &SweepConfig, parallel: usize) -> Result<(Vec<DataRow>, String)> {
    let cells = expand_cells(cfg);
    let rows = run_cells(cfg, &cells, parallel)?;
    let csv = to_csv(&rows)?;
    Ok((rows, csv))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> SweepConfig {
        let mut cfg = SweepConfig::parse(
            "policy = [\"cocoa\", \"default_coap\"]\n\
             topology = \"chain\"\n\
             ldr = [0.5, 1.0]\n\
             loads_kbps = [1.0, 2.0]\n\
             seeds = [2, 1]\n\
             measurement_s = 60.0\n",
        )
        .unwrap();
        cfg.warmup_s = 30.0;
        cfg
    }

    #[test]
    fn cells_expand_in_canonical_order() {
        let cells = expand_cells(&small_config());
        // 2 policies, 1 topology, 2 ldrs, 2 loads, 2 seeds.
        assert_eq!(cells.len(), 16);
        // Declaration order restored regardless of config order.
        assert_eq!(cells[0].policy, PolicyKind::DefaultCoap);
        // Descending ldr, ascending load and seed.
        assert_eq!(cells[0].ldr, 1.0);
        assert_eq!(cells[0].seed, 1);
        assert_eq!(cells[1].seed, 2);
        let last = cells.last().unwrap();
        assert_eq!(last.policy, PolicyKind::Cocoa);
        assert_eq!(last.ldr, 0.5);
        assert_eq!(last.offered_kbps, 2.0);
        assert_eq!(last.seed, 2);
    }

    #[test]
    fn csv_has_one_summary_row_per_group() {
        let cfg = small_config();
        let (rows, csv) = run_sweep(&cfg, 0).unwrap();
        assert_eq!(rows.len(), 16);
        let lines: Vec<&str> = csv.lines().collect();
        // header + 16 data + 8 summaries
        assert_eq!(lines.len(), 1 + 16 + 8);
        assert_eq!(lines[0], CSV_HEADER.join(","));
        assert_eq!(csv.matches(",mean,").count(), 8);
    }

    #[test]
    fn summary_mean_recomputes_from_members() {
        let cfg = small_config();
        let (_, csv) = run_sweep(&cfg, 0).unwrap();
        let mut members: Vec<Vec<f64>> = Vec::new();
        for line in csv.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            let metrics: Vec<f64> = cols[5..].iter().map(|c| c.parse().unwrap()).collect();
            if cols[4] == "mean" {
                for (k, want) in metrics.iter().enumerate() {
                    let vals: Vec<f64> = members.iter().map(|row| row[k]).collect();
                    assert_eq!(mean(&vals), *want, "column {} drifted", CSV_HEADER[5 + k]);
                }
                members.clear();
            } else {
                members.push(metrics);
            }
        }
        assert!(members.is_empty(), "file must end with a summary row");
    }

    #[test]
    fn parallel_and_serial_output_are_identical() {
        let cfg = small_config();
        let (_, serial) = run_sweep(&cfg, 0).unwrap();
        let (_, parallel) = run_sweep(&cfg, 4).unwrap();
        assert_eq!(serial, parallel);
    }

    #[test]
    fn rerun_is_byte_identical() {
        let cfg = small_config();
        let (_, a) = run_sweep(&cfg, 0).unwrap();
        let (_, b) = run_sweep(&cfg, 0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn floats_round_trip_through_the_csv() {
        for v in [0.1234567890123, 1.0, 0.25, 19.880000000000003] {
            let parsed: f64 = fmt_f64(v).parse().unwrap();
            assert_eq!(parsed, v);
        }
    }
}
