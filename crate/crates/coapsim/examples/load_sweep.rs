//! Quick load sweep over one topology, printed as a table.
//!
//! Usage: cargo run --release --example load_sweep [topology] [ldr]

use coapsim::cc::PolicyKind;
use coapsim::engine::scenario::Scenario;
use coapsim::engine::sim::run_scenario;
use coapsim::topology::TopologyKind;

fn main() {
    let mut args = std::env::args().skip(1);
    let topology: TopologyKind = args
        .next()
        .map(|s| s.parse().expect("chain|dumbbell|grid6|grid7"))
        .unwrap_or(TopologyKind::Grid6);
    let ldr: f64 = args
        .next()
        .map(|s| s.parse().expect("ldr in (0,1]"))
        .unwrap_or(1.0);

    println!("{topology} ldr={ldr}");
    println!(
        "{:<14} {:>5} {:>7} {:>9} {:>9} {:>9} {:>8}",
        "policy", "kbps", "pdr", "carried", "delay_s", "overflow", "retx"
    );
    for policy in PolicyKind::ALL {
        for load in 1..=10 {
            let sc = Scenario::new(policy, topology, ldr, f64::from(load), 1);
            let m = run_scenario(sc).expect("run").metrics;
            println!(
                "{:<14} {:>5} {:>7.3} {:>9.2} {:>9.2} {:>9} {:>8}",
                policy.name(),
                load,
                m.pdr,
                m.carried_load_kbps,
                m.mean_delay_s,
                m.mac_overflows,
                m.retransmissions
            );
        }
    }
}
