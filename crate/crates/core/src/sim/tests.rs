use super::*;
use crate::analytics::{Protocol, Variant};
use crate::protocol::DropReason;

fn short(protocol: Protocol, variant: Variant) -> SimConfig {
    let mut cfg = SimConfig::new(protocol, variant);
    cfg.duration = 60.0;
    cfg.warmup = 5.0;
    cfg
}

fn conserved(m: &MetricsRecord) -> bool {
    m.data_sent == m.data_delivered + m.dropped_total() + m.data_in_flight
}

#[test]
fn hop_delay_is_serialization_plus_processing() {
    let cfg = SimConfig::new(Protocol::Aodv, Variant::Ers1);
    assert_eq!(cfg.hop_delay(512), SimTime(2_048_000 + 1_000_000));
}

#[test]
fn validation_names_the_field() {
    let mut cfg = SimConfig::new(Protocol::Dsr, Variant::Ers1);
    cfg.p_s = 1.5;
    let err = cfg.validate().unwrap_err();
    assert!(err.to_string().contains("p_s"));
    cfg.p_s = 1.0;
    cfg.warmup = 900.0;
    assert!(cfg.validate().unwrap_err().to_string().contains("warmup"));
}

#[test]
fn static_line_delivers_everything() {
    for protocol in Protocol::ALL {
        let mut cfg = short(protocol, Variant::Ers1);
        cfg.v_max = 0.0;
        cfg.flows = 0;
        cfg.duration = 20.0;
        cfg.warmup = 0.0;
        let graph = crate::topology::Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]);
        let mut sim = Simulator::with_graph(cfg, 1, graph).unwrap();
        sim.run_until(SimTime::from_secs_f64(2.0));
        for _ in 0..5 {
            sim.inject_data(NodeId(0), NodeId(3));
        }
        let out = sim.run();
        let m = &out.metrics;
        assert_eq!(m.data_sent, 5, "{protocol}");
        assert_eq!(m.data_delivered, 5, "{protocol}");
        assert!(conserved(m));
        assert!(m.control.rreq >= 1);
    }
}

#[test]
fn mobile_runs_conserve_data_and_are_repeatable() {
    for protocol in Protocol::ALL {
        for variant in [Variant::Ers1, Variant::Ers2] {
            let cfg = short(protocol, variant);
            let a = run(&cfg, 7).unwrap().metrics;
            let b = run(&cfg, 7).unwrap().metrics;
            assert_eq!(a, b, "{protocol} {variant}");
            assert!(conserved(&a), "{protocol} {variant}: {a:?}");
            assert!(a.data_sent > 0 && a.data_delivered > 0, "{protocol} {variant}");
            assert_eq!(a.protocol_errors, 0, "{protocol} {variant}");
        }
    }
}

#[test]
fn unknown_destination_exhausts_schedule() {
    let mut cfg = short(Protocol::Aodv, Variant::Ers1);
    cfg.v_max = 0.0;
    cfg.flows = 0;
    cfg.warmup = 0.0;
    cfg.trace = true;
    let graph = crate::topology::Graph::from_edges(3, &[(0, 1), (1, 2)]);
    let mut sim = Simulator::with_graph(cfg, 1, graph).unwrap();
    sim.inject_data(NodeId(0), NodeId(9));
    let out = sim.run();
    assert_eq!(out.metrics.discovery_failures, 1);
    assert_eq!(out.metrics.data_dropped.get(&DropReason::DiscoveryFailed), Some(&1));
    let origin_sends = out
        .trace
        .iter()
        .filter(|r| r.event == TraceEvent::Send && r.node == NodeId(0) && r.kind == PacketKind::Rreq)
        .count();
    assert_eq!(origin_sends, 6);
}
