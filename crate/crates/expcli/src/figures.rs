//! Per-figure data files: carried load against offered load, one series
//! per policy, means over seeds for one (topology, delivery-ratio) pair.

use crate::sweep::{fmt_f64, mean, DataRow};
use anyhow::{bail, Result};
use coapsim::cc::PolicyKind;
use coapsim::topology::TopologyKind;

#[derive(Clone, Copy, Debug)]
pub struct FigureSpec {
    pub id: &'static str,
    pub topology: TopologyKind,
    pub ldr: f64,
}

pub const FIGURES: [FigureSpec; 12] = [
    FigureSpec { id: "fig8", topology: TopologyKind::Grid6, ldr: 1.0 },
    FigureSpec { id: "fig9", topology: TopologyKind::Grid6, ldr: 0.5 },
    FigureSpec { id: "fig10", topology: TopologyKind::Grid6, ldr: 0.25 },
    FigureSpec { id: "fig11", topology: TopologyKind::Chain, ldr: 1.0 },
    FigureSpec { id: "fig12", topology: TopologyKind::Chain, ldr: 0.5 },
    FigureSpec { id: "fig13", topology: TopologyKind::Chain, ldr: 0.25 },
    FigureSpec { id: "fig14", topology: TopologyKind::Dumbbell, ldr: 1.0 },
    FigureSpec { id: "fig15", topology: TopologyKind::Dumbbell, ldr: 0.5 },
    FigureSpec { id: "fig16", topology: TopologyKind::Dumbbell, ldr: 0.25 },
    FigureSpec { id: "fig17", topology: TopologyKind::Grid7, ldr: 1.0 },
    FigureSpec { id: "fig18", topology: TopologyKind::Grid7, ldr: 0.5 },
    FigureSpec { id: "fig19", topology: TopologyKind::Grid7, ldr: 0.25 },
];

pub fn lookup(id: &str) -> Result<FigureSpec> {
    let wanted = id.trim().to_ascii_lowercase();
    // Accept zero-padded forms like fig08.
    let normalized = match wanted.strip_prefix("fig").and_then(|n| n.parse::<u32>().ok()) {
        Some(n) => format!("fig{n}"),
        None => wanted,
    };
    FIGURES
        .iter()
        .copied()
        .find(|f| f.id == normalized)
        .ok_or_else(|| {
            let valid: Vec<&str> = FIGURES.iter().map(|f| f.id).collect();
            anyhow::anyhow!("unknown figure id {id:?} (valid: {})", valid.join(", "))
        })
}

pub fn filename(spec: &FigureSpec) -> String {
    let number: u32 = spec.id.strip_prefix("fig").unwrap().parse().unwrap();
    let pct = (spec.ldr * 100.0).round() as u32;
    format!("fig{number:02}_{}_ldr{pct}.csv", spec.topology.name())
}

/// Renders one figure file from sweep data rows. Loads missing a value
/// for some policy keep an empty cell; each gap is reported back so the
/// caller can warn about it.
pub fn render(spec: &FigureSpec, rows: &[DataRow]) -> Result<(String, Vec<String>)> {
    let relevant: Vec<&DataRow> = rows
        .iter()
        .filter(|r| r.key.topology == spec.topology && r.key.ldr == spec.ldr)
        .collect();
    if relevant.is_empty() {
        bail!(
            "no sweep rows cover {} at ldr {}",
            spec.topology,
            spec.ldr
        );
    }
    let mut loads: Vec<f64> = relevant.iter().map(|r| r.key.offered_kbps).collect();
    loads.sort_by(f64::total_cmp);
    loads.dedup();

    let mut warnings = Vec::new();
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = std::iter::once("offered_kbps".to_string())
        .chain(
            PolicyKind::ALL
                .iter()
                .map(|p| format!("{}_carried_kbps", p.name())),
        )
        .collect();
    w.write_record(&header)?;
    for &load in &loads {
        let mut record = vec![fmt_f64(load)];
        for policy in PolicyKind::ALL {
            let carried: Vec<f64> = relevant
                .iter()
                .filter(|r| r.key.policy == policy && r.key.offered_kbps == load)
                .filter_map(|r| r.outcome.as_ref().ok())
                .map(|m| m.carried_load_kbps)
                .collect();
            if carried.is_empty() {
                warnings.push(format!(
                    "{}: no data for {} at {} kbps",
                    spec.id,
                    policy.name(),
                    load
                ));
                record.push(String::new());
            } else {
                record.push(fmt_f64(mean(&carried)));
            }
        }
        w.write_record(&record)?;
    }
    let bytes = w.into_inner()?;
    Ok((String::from_utf8(bytes).expect("UTF-8"), warnings))
}
