use coapsim::cc::PolicyKind;
use coapsim::engine::scenario::{Scenario, TrafficMode};
use coapsim::engine::sim::run_scenario;
use coapsim::topology::TopologyKind;

#[test]
fn every_topology_runs_clean_at_moderate_load() {
    for topology in TopologyKind::ALL {
        for policy in PolicyKind::ALL {
            let sc = Scenario::new(policy, topology, 1.0, 2.0, 1);
            let m = run_scenario(sc).expect("run must conserve frames").metrics;
            assert!(m.requests_sent > 0, "{topology} {policy}: no traffic");
            assert!(
                (0.0..=1.0).contains(&m.pdr),
                "{topology} {policy}: pdr {} out of range",
                m.pdr
            );
            assert!(
                (m.carried_load_kbps - m.pdr * m.offered_load_kbps).abs() < 1e-12,
                "carried load must be pdr-scaled offered load"
            );
            assert_eq!(m.anomalies, 0, "{topology} {policy}: unexpected messages");
            assert_eq!(
                m.requests_sent,
                m.acked_exchanges + m.failed_exchanges + m.pending_exchanges
            );
        }
    }
}

#[test]
fn measured_offered_load_tracks_configuration() {
    for &load in &[1.0, 5.0, 10.0] {
        let sc = Scenario::new(PolicyKind::Cocoa, TopologyKind::Chain, 1.0, load, 3);
        let m = run_scenario(sc).unwrap().metrics;
        let rel = (m.measured_offered_kbps - load).abs() / load;
        assert!(
            rel < 0.02,
            "offered {load} kbps but generated {} kbps",
            m.measured_offered_kbps
        );
    }
}

#[test]
fn uncontended_chain_carries_what_is_offered() {
    let sc = Scenario::new(PolicyKind::DefaultCoap, TopologyKind::Chain, 1.0, 1.0, 2);
    let m = run_scenario(sc).unwrap().metrics;
    let rel = (m.carried_load_kbps - m.offered_load_kbps).abs() / m.offered_load_kbps;
    assert!(rel < 0.02, "carried {} kbps", m.carried_load_kbps);
}

#[test]
fn repeated_runs_are_bit_identical() {
    let run = || {
        let mut sc = Scenario::new(PolicyKind::CocoaPlus, TopologyKind::Grid7, 0.5, 6.0, 4);
        sc.record_trace = true;
        run_scenario(sc).unwrap()
    };
    let a = run();
    let b = run();
    assert_eq!(a.metrics, b.metrics);
    assert_eq!(a.trace.len(), b.trace.len());
    assert!(a.trace.iter().zip(&b.trace).all(|(x, y)| x == y));
}

#[test]
fn congestion_erodes_delivery() {
    for policy in PolicyKind::ALL {
        let low = run_scenario(Scenario::new(policy, TopologyKind::Grid6, 1.0, 1.0, 1))
            .unwrap()
            .metrics;
        let high = run_scenario(Scenario::new(policy, TopologyKind::Grid6, 1.0, 10.0, 1))
            .unwrap()
            .metrics;
        assert!(
            high.pdr < low.pdr,
            "{policy}: pdr {} at 10 kbps vs {} at 1 kbps",
            high.pdr,
            low.pdr
        );
        assert!(high.mac_overflows > 0, "{policy}: no buffer pressure");
    }
}

#[test]
fn lossier_links_cost_more_retransmissions() {
    let run = |ldr| {
        run_scenario(Scenario::new(PolicyKind::Cocoa, TopologyKind::Chain, ldr, 1.0, 5))
            .unwrap()
            .metrics
    };
    let clean = run(1.0);
    let half = run(0.5);
    let quarter = run(0.25);
    assert!(clean.retransmissions < half.retransmissions);
    assert!(half.retransmissions < quarter.retransmissions);
    assert!(quarter.pdr <= half.pdr);
}

#[test]
fn poisson_arrivals_hit_the_same_average_rate() {
    let mut sc = Scenario::new(PolicyKind::Cocoa, TopologyKind::Grid6, 1.0, 2.0, 8);
    sc.traffic_mode = TrafficMode::Poisson;
    let m = run_scenario(sc).unwrap().metrics;
    let rel = (m.measured_offered_kbps - 2.0).abs() / 2.0;
    assert!(rel < 0.1, "poisson offered {} kbps", m.measured_offered_kbps);
    assert!(m.pdr > 0.9);
}

#[test]
fn delays_grow_with_load() {
    let run = |load| {
        run_scenario(Scenario::new(PolicyKind::Cocoa, TopologyKind::Dumbbell, 1.0, load, 6))
            .unwrap()
            .metrics
    };
    let light = run(1.0);
    let heavy = run(8.0);
    assert!(light.mean_delay_s > 0.0);
    assert!(heavy.mean_delay_s > light.mean_delay_s);
    assert!(light.p95_delay_s >= light.mean_delay_s);
}
