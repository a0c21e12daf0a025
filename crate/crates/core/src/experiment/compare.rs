//! Analytic model against the simulator on frozen topologies.

use std::fmt;
use std::time::Duration;

use super::config::ScenarioConfig;
use crate::analytics::{ring_cost_simple, rings_cost, Protocol, TtlSchedule, Variant};
use crate::packet::PacketKind;
use crate::protocol::{DropReason, RouterConfig};
use crate::sim::{ConfigError, SimConfig, SimTime, Simulator, TraceEvent};
use crate::topology::{bfs_rings, connectivity_profile, generate_connected_topology, Graph, NodeId};

/// One ring of an observed discovery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingObservation {
    pub ttl: u32,
    pub sent_at: SimTime,
    /// Transmissions of this ring's request by any node.
    pub transmissions: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveryProbe {
    pub schedule: TtlSchedule,
    pub rings: Vec<RingObservation>,
    /// When the search gave up, if it did.
    pub failed_at: Option<SimTime>,
}

impl DiscoveryProbe {
    /// Gaps between successive ring transmissions at the source, then the
    /// final wait before giving up.
    pub fn observed_waits(&self) -> Vec<Duration> {
        let mut out: Vec<Duration> = self.rings.windows(2).map(|w| w[1].sent_at - w[0].sent_at).collect();
        if let (Some(last), Some(end)) = (self.rings.last(), self.failed_at) {
            out.push(end - last.sent_at);
        }
        out
    }

    pub fn total_transmissions(&self) -> u64 {
        self.rings.iter().map(|r| r.transmissions).sum()
    }
}

/// Run one discovery from `source` for `dest` on a static copy of `graph`
/// with no other traffic. `dest` may lie outside the graph, in which case
/// every ring fails and the whole schedule is observed.
pub fn probe_discovery(
    protocol: Protocol,
    variant: Variant,
    graph: &Graph,
    source: NodeId,
    dest: NodeId,
    p_s: f64,
) -> Result<DiscoveryProbe, ConfigError> {
    let mut cfg = SimConfig::new(protocol, variant);
    cfg.v_max = 0.0;
    cfg.flows = 0;
    cfg.warmup = 0.0;
    cfg.p_s = p_s;
    cfg.trace = true;
    // the graph stays frozen, so the range only matters for bookkeeping
    if graph.radio_range() > 0.0 {
        cfg.arena.radio_range = graph.radio_range();
    }
    let schedule = cfg.router_config()?.schedule;
    cfg.duration = (schedule.total_wait(&cfg.params) + Duration::from_secs(2)).as_secs_f64();
    let mut sim = Simulator::with_graph(cfg, 0, graph.clone())?;
    sim.inject_data(source, dest);
    let out = sim.run();

    let mut rings: Vec<(u32, RingObservation)> = Vec::new();
    let mut failed_at = None;
    for r in &out.trace {
        match (r.event, r.kind) {
            (TraceEvent::Send, PacketKind::Rreq) if r.src == source && r.dst == dest => {
                let id = r.request_id.expect("requests carry an id");
                match rings.iter_mut().find(|(rid, _)| *rid == id) {
                    Some((_, obs)) => obs.transmissions += 1,
                    None => {
                        debug_assert_eq!(r.node, source, "a ring starts at its source");
                        rings.push((id, RingObservation { ttl: r.ttl, sent_at: r.time, transmissions: 1 }));
                    }
                }
            }
            (TraceEvent::Drop, PacketKind::Data) if r.reason == Some(DropReason::DiscoveryFailed) => {
                failed_at = Some(r.time);
            }
            _ => {}
        }
    }
    Ok(DiscoveryProbe { schedule, rings: rings.into_iter().map(|(_, o)| o).collect(), failed_at })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub protocol: Protocol,
    pub variant: Variant,
    pub topology_seed: u64,
    pub rings: usize,
    /// Ring census summed over the schedule.
    pub census_rreq: u64,
    pub simulated_rreq: u64,
    /// Expected cost from the measured connectivity profile.
    pub model_bm: f64,
    pub analytic_first_wait: Duration,
    pub simulated_first_wait: Option<Duration>,
    pub analytic_wait: Duration,
    pub simulated_wait: Option<Duration>,
}

impl CompareRow {
    pub fn relative_error(&self) -> f64 {
        (self.simulated_rreq as f64 - self.census_rreq as f64) / self.census_rreq as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareTable {
    pub rows: Vec<CompareRow>,
}

/// For each protocol and variant, on one frozen connected topology per seed,
/// search from node 0 for a node that does not exist and set the observed
/// request count and waits against the census and the analytic waits.
pub fn analytic_compare(config: &ScenarioConfig) -> Result<CompareTable, ConfigError> {
    let mut rows = Vec::new();
    let absent = NodeId(config.nodes as u32);
    let source = NodeId(0);
    for &seed in &config.seeds {
        let (topology_seed, graph) = generate_connected_topology(seed, config.nodes, &config.arena);
        let census = bfs_rings(&graph, source).expect("source is in the graph");
        let profile = connectivity_profile(&graph, source, config.p_s).expect("source is in the graph");
        for &protocol in &config.protocols {
            for &variant in &config.variants {
                let probe = probe_discovery(protocol, variant, &graph, source, absent, config.p_s)?;
                let rc = RouterConfig::preset(protocol, variant);
                let schedule = &probe.schedule;
                let census = census.padded(schedule.max_ttl());
                let census_rreq =
                    schedule.rings().iter().map(|&ttl| ring_cost_simple(&census, ttl).expect("padded census")).sum();
                let model_bm =
                    rings_cost(schedule.rings(), &profile.padded(schedule.max_ttl())).expect("padded profile");
                let waits = probe.observed_waits();
                rows.push(CompareRow {
                    protocol,
                    variant,
                    topology_seed,
                    rings: probe.rings.len(),
                    census_rreq,
                    simulated_rreq: probe.total_transmissions(),
                    model_bm,
                    analytic_first_wait: rc.params.ring_wait(protocol, 0, schedule.rings()[0]),
                    simulated_first_wait: waits.first().copied(),
                    analytic_wait: schedule.total_wait(&rc.params),
                    simulated_wait: probe.failed_at.zip(probe.rings.first()).map(|(end, r)| end - r.sent_at),
                });
            }
        }
    }
    Ok(CompareTable { rows })
}

fn ms(d: Option<Duration>) -> String {
    d.map_or_else(|| "-".to_string(), |d| format!("{:.3}", d.as_secs_f64() * 1e3))
}

impl fmt::Display for CompareTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<5} {:<5} {:>6} {:>5} {:>7} {:>7} {:>8} {:>10} {:>12} {:>12} {:>12} {:>12}",
            "proto",
            "var",
            "topo",
            "rings",
            "census",
            "sim",
            "err",
            "model B_M",
            "wait1 (ms)",
            "sim1 (ms)",
            "wait (ms)",
            "sim (ms)"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<5} {:<5} {:>6} {:>5} {:>7} {:>7} {:>7.2}% {:>10.2} {:>12} {:>12} {:>12} {:>12}",
                r.protocol.to_string(),
                r.variant.to_string(),
                r.topology_seed,
                r.rings,
                r.census_rreq,
                r.simulated_rreq,
                r.relative_error() * 100.0,
                r.model_bm,
                ms(Some(r.analytic_first_wait)),
                ms(r.simulated_first_wait),
                ms(Some(r.analytic_wait)),
                ms(r.simulated_wait),
            )?;
        }
        Ok(())
    }
}
