//! Deterministic discrete-event engine.
//!
//! Links follow the unit-disk rule over the current node positions; a
//! broadcast reaches every neighbor after serialization plus a fixed
//! processing delay, with no MAC contention or collisions. DSR unicasts are
//! also overheard by the sender's other neighbors.

mod event;
mod metrics;
mod time;
mod trace;

use std::collections::VecDeque;
use std::sync::Arc;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use event::EventQueue;
pub use metrics::{compute_e2ed, compute_nrl, compute_throughput, ControlCounts, DeliveryRecord, MetricsRecord};
pub use time::SimTime;
pub use trace::{write_trace, TraceEvent, TraceRecord};

use crate::analytics::{ErsParams, Protocol, Variant};
use crate::mobility::{waypoint_step, WaypointState};
use crate::packet::{Body, Packet, PacketKind, DATA_PACKET_SIZE};
use crate::protocol::{data_packet, Action, Ctx, Router, RouterConfig, Timer};
use crate::topology::{generate_topology, Arena, Graph, NodeId};

const STREAM_MOBILITY: u64 = 1;
const STREAM_TRAFFIC: u64 = 2;
const STREAM_FORWARDING: u64 = 3;
const STREAM_HELLO: u64 = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, reason: reason.into() }
}

/// One simulated scenario: a protocol/variant pair on one mobility setting.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub protocol: Protocol,
    pub variant: Variant,
    pub params: ErsParams,
    pub nodes: usize,
    pub arena: Arena,
    /// Maximum node speed, m/s. Zero freezes the topology.
    pub v_max: f64,
    pub pause_time: f64,
    pub duration: f64,
    pub warmup: f64,
    pub flows: usize,
    /// Packets per second per flow.
    pub rate: f64,
    pub packet_size: u32,
    pub p_s: f64,
    pub bandwidth_bps: f64,
    pub processing_delay: f64,
    pub mobility_tick: f64,
    pub queue_capacity: usize,
    pub route_lifetime: f64,
    pub hello_loss: u32,
    /// Flow start times are drawn uniformly from `[0, flow_start_spread)`.
    pub flow_start_spread: f64,
    pub trace: bool,
}

impl SimConfig {
    pub fn new(protocol: Protocol, variant: Variant) -> Self {
        SimConfig {
            protocol,
            variant,
            params: ErsParams::preset(protocol, variant),
            nodes: 50,
            arena: Arena::default(),
            v_max: 30.0,
            pause_time: 0.0,
            duration: 900.0,
            warmup: 50.0,
            flows: 10,
            rate: 4.0,
            packet_size: DATA_PACKET_SIZE,
            p_s: 1.0,
            bandwidth_bps: 2e6,
            processing_delay: 0.001,
            mobility_tick: 0.1,
            queue_capacity: 64,
            route_lifetime: 10.0,
            hello_loss: 2,
            flow_start_spread: 5.0,
            trace: false,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.params.validate().map_err(|e| invalid("params", e.to_string()))?;
        if self.nodes == 0 {
            return Err(invalid("nodes", "must be at least 1"));
        }
        if self.flows > 0 && self.nodes < 2 {
            return Err(invalid("flows", "traffic needs at least two nodes"));
        }
        for (field, v) in [
            ("width", self.arena.width),
            ("height", self.arena.height),
            ("radio_range", self.arena.radio_range),
            ("duration", self.duration),
            ("bandwidth", self.bandwidth_bps),
            ("mobility_tick", self.mobility_tick),
            ("route_lifetime", self.route_lifetime),
        ] {
            if v.is_nan() || v <= 0.0 {
                return Err(invalid(field, "must be positive"));
            }
        }
        for (field, v) in [
            ("v_max", self.v_max),
            ("pause_time", self.pause_time),
            ("warmup", self.warmup),
            ("processing_delay", self.processing_delay),
            ("flow_start_spread", self.flow_start_spread),
        ] {
            if v.is_nan() || v < 0.0 {
                return Err(invalid(field, "must be non-negative"));
            }
        }
        if self.warmup >= self.duration {
            return Err(invalid("warmup", "must be shorter than duration"));
        }
        if self.flows > 0 && (self.rate.is_nan() || self.rate <= 0.0) {
            return Err(invalid("rate", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.p_s) {
            return Err(invalid("p_s", "must lie in [0, 1]"));
        }
        if self.packet_size == 0 {
            return Err(invalid("packet_size", "must be positive"));
        }
        if self.queue_capacity == 0 {
            return Err(invalid("queue_capacity", "must be at least 1"));
        }
        if self.hello_loss == 0 {
            return Err(invalid("hello_loss", "must be at least 1"));
        }
        Ok(())
    }

    pub fn router_config(&self) -> Result<RouterConfig, ConfigError> {
        let mut rc = RouterConfig::new(self.protocol, self.variant, self.params.clone())
            .map_err(|e| invalid("params", e.to_string()))?;
        rc.p_s = self.p_s;
        rc.route_lifetime = Duration::from_secs_f64(self.route_lifetime);
        rc.queue_capacity = self.queue_capacity;
        rc.hello_loss = self.hello_loss;
        Ok(rc)
    }

    /// Serialization plus processing delay for one hop.
    pub fn hop_delay(&self, size: u32) -> SimTime {
        let serialization = (size as u64 * 8 * 1_000_000_000) as f64 / self.bandwidth_bps;
        SimTime(serialization.round() as u64) + SimTime::from_secs_f64(self.processing_delay)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Flow {
    pub src: NodeId,
    pub dst: NodeId,
    pub start: SimTime,
}

#[derive(Debug, Clone)]
enum Event {
    Deliver { to: NodeId, from: NodeId, packet: Packet, overheard: bool },
    Timer { node: NodeId, timer: Timer },
    MobilityTick,
    Traffic { flow: usize },
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: MetricsRecord,
    pub trace: Vec<TraceRecord>,
}

pub struct Simulator {
    cfg: SimConfig,
    now: SimTime,
    end: SimTime,
    queue: EventQueue<Event>,
    routers: Vec<Router>,
    motion: Vec<WaypointState>,
    graph: Graph,
    flows: Vec<Flow>,
    flow_interval: Duration,
    mobility_rng: ChaCha8Rng,
    forwarding_rng: ChaCha8Rng,
    next_uid: u64,
    metrics: MetricsRecord,
    trace: Option<Vec<TraceRecord>>,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

impl Simulator {
    /// Fresh scenario: node positions from `generate_topology(seed, ..)`,
    /// random flows, hello timers and mobility scheduled.
    pub fn new(cfg: SimConfig, seed: u64) -> Result<Self, ConfigError> {
        let graph = generate_topology(seed, cfg.nodes, &cfg.arena);
        Self::with_graph(cfg, seed, graph)
    }

    /// Scenario on a caller-supplied starting topology. With `v_max > 0` the
    /// adjacency is rebuilt from positions on every mobility tick.
    pub fn with_graph(mut cfg: SimConfig, seed: u64, graph: Graph) -> Result<Self, ConfigError> {
        cfg.nodes = graph.len();
        cfg.validate()?;
        let rc = Arc::new(cfg.router_config()?);
        let routers = (0..graph.len()).map(|i| Router::new(NodeId(i as u32), rc.clone())).collect();
        let mut mobility_rng = stream(seed, STREAM_MOBILITY);
        let motion = graph
            .positions()
            .iter()
            .map(|&p| WaypointState::start(p, &cfg.arena, cfg.v_max, &mut mobility_rng))
            .collect();

        let mut traffic_rng = stream(seed, STREAM_TRAFFIC);
        let n = graph.len() as u32;
        let flows = (0..cfg.flows)
            .map(|_| {
                let src = traffic_rng.gen_range(0..n);
                let dst = (src + traffic_rng.gen_range(1..n)) % n;
                let start = SimTime::from_secs_f64(traffic_rng.gen::<f64>() * cfg.flow_start_spread);
                Flow { src: NodeId(src), dst: NodeId(dst), start }
            })
            .collect::<Vec<_>>();

        let window_start = SimTime::from_secs_f64(cfg.warmup);
        let end = SimTime::from_secs_f64(cfg.duration);
        let mut sim = Simulator {
            flow_interval: if cfg.flows > 0 { Duration::from_secs_f64(1.0 / cfg.rate) } else { Duration::ZERO },
            now: SimTime::ZERO,
            end,
            queue: EventQueue::default(),
            routers,
            motion,
            graph,
            flows,
            mobility_rng,
            forwarding_rng: stream(seed, STREAM_FORWARDING),
            next_uid: 0,
            metrics: MetricsRecord { window_start, window_end: end, ..Default::default() },
            trace: cfg.trace.then(Vec::new),
            cfg,
        };

        for (i, flow) in sim.flows.iter().enumerate() {
            sim.queue.push(flow.start, Event::Traffic { flow: i });
        }
        if sim.cfg.protocol.uses_hello() {
            let mut hello_rng = stream(seed, STREAM_HELLO);
            let interval = sim.cfg.params.hello_interval.as_secs_f64();
            for i in 0..sim.routers.len() {
                let at = SimTime::from_secs_f64(hello_rng.gen::<f64>() * interval);
                sim.queue.push(at, Event::Timer { node: NodeId(i as u32), timer: Timer::Hello });
            }
        }
        if sim.cfg.v_max > 0.0 {
            sim.queue.push(SimTime::from_secs_f64(sim.cfg.mobility_tick), Event::MobilityTick);
        }
        Ok(sim)
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn flows(&self) -> &[Flow] {
        &self.flows
    }

    pub fn router(&self, node: NodeId) -> &Router {
        &self.routers[node.index()]
    }

    pub fn router_mut(&mut self, node: NodeId) -> &mut Router {
        &mut self.routers[node.index()]
    }

    pub fn metrics(&self) -> &MetricsRecord {
        &self.metrics
    }

    pub fn trace(&self) -> &[TraceRecord] {
        self.trace.as_deref().unwrap_or(&[])
    }

    pub fn positions(&self) -> Vec<crate::topology::Point> {
        self.motion.iter().map(|m| m.position).collect()
    }

    /// Swap the connectivity snapshot, e.g. to cut a link mid-run.
    pub fn replace_graph(&mut self, graph: Graph) {
        assert_eq!(graph.len(), self.routers.len(), "node count is fixed for a run");
        self.graph = graph;
    }

    /// Start a route discovery at `node` for `dest` at the current time.
    /// `dest` need not be a node of the network.
    pub fn start_discovery(&mut self, node: NodeId, dest: NodeId) -> Option<Packet> {
        let mut first = None;
        self.with_router(node, |router, ctx| first = router.initiate_discovery(ctx, dest));
        first
    }

    /// Hand a data packet to `src` as if its traffic source produced it.
    pub fn inject_data(&mut self, src: NodeId, dst: NodeId) -> u64 {
        let uid = self.next_uid;
        self.next_uid += 1;
        let mut packet = data_packet(uid, u32::MAX, src, dst, self.now);
        if let Body::Data(d) = &mut packet.body {
            d.size = self.cfg.packet_size;
        }
        if self.metrics.in_window(self.now) {
            self.metrics.data_sent += 1;
        }
        self.with_router(src, |router, ctx| router.originate(ctx, packet));
        uid
    }

    /// Process every event scheduled at or before `until`.
    pub fn run_until(&mut self, until: SimTime) {
        while let Some(t) = self.queue.peek_time() {
            if t > until {
                break;
            }
            let (t, event) = self.queue.pop().expect("peeked");
            debug_assert!(t >= self.now, "event scheduled in the past");
            self.now = t;
            self.dispatch(event);
        }
        self.now = self.now.max(until);
    }

    /// Run to the configured end and collect results.
    pub fn run(mut self) -> RunOutput {
        self.run_until(self.end);
        self.finish()
    }

    pub fn finish(mut self) -> RunOutput {
        let window_start = self.metrics.window_start;
        let queued = self.routers.iter().flat_map(Router::queued_data).filter(|p| p.created_at >= window_start).count();
        let on_air = self
            .queue
            .iter()
            .filter(|e| {
                matches!(e, Event::Deliver { packet, overheard: false, .. }
                    if packet.kind() == PacketKind::Data && packet.created_at >= window_start)
            })
            .count();
        self.metrics.data_in_flight = (queued + on_air) as u64;
        self.metrics.window_end = self.now.min(self.end).max(window_start);
        RunOutput { metrics: self.metrics, trace: self.trace.unwrap_or_default() }
    }

    fn dispatch(&mut self, event: Event) {
        match event {
            Event::Deliver { to, from, packet, overheard } => {
                if !overheard {
                    self.record(TraceEvent::Recv, to, &packet, None);
                }
                self.with_router(to, |router, ctx| router.receive(ctx, from, packet, overheard));
            }
            Event::Timer { node, timer } => {
                self.with_router(node, |router, ctx| router.handle_timer(ctx, timer));
            }
            Event::MobilityTick => self.mobility_tick(),
            Event::Traffic { flow } => {
                let Flow { src, dst, .. } = self.flows[flow];
                let uid = self.next_uid;
                self.next_uid += 1;
                let mut packet = data_packet(uid, flow as u32, src, dst, self.now);
                if let Body::Data(d) = &mut packet.body {
                    d.size = self.cfg.packet_size;
                }
                if self.metrics.in_window(self.now) {
                    self.metrics.data_sent += 1;
                }
                self.with_router(src, |router, ctx| router.originate(ctx, packet));
                self.queue.push(self.now + self.flow_interval, Event::Traffic { flow });
            }
        }
    }

    fn mobility_tick(&mut self) {
        let dt = self.cfg.mobility_tick;
        for state in &mut self.motion {
            *state =
                waypoint_step(*state, dt, self.cfg.pause_time, self.cfg.v_max, &self.cfg.arena, &mut self.mobility_rng);
        }
        self.graph = Graph::from_positions(self.positions(), self.cfg.arena.radio_range);
        self.queue.push(self.now + Duration::from_secs_f64(dt), Event::MobilityTick);
    }

    fn with_router<F>(&mut self, node: NodeId, f: F)
    where
        F: FnOnce(&mut Router, &mut Ctx<'_>),
    {
        let mut out = Vec::new();
        {
            let mut ctx = Ctx { now: self.now, rng: &mut self.forwarding_rng, out: &mut out };
            f(&mut self.routers[node.index()], &mut ctx);
        }
        self.apply(node, out);
    }

    fn record(
        &mut self,
        event: TraceEvent,
        node: NodeId,
        packet: &Packet,
        reason: Option<crate::protocol::DropReason>,
    ) {
        if let Some(trace) = &mut self.trace {
            trace.push(TraceRecord {
                time: self.now,
                event,
                node,
                kind: packet.kind(),
                src: packet.src,
                dst: packet.dst,
                ttl: packet.ttl,
                reason,
                request_id: packet.request_id(),
            });
        }
    }

    fn apply(&mut self, node: NodeId, actions: Vec<Action>) {
        let mut work: VecDeque<Action> = actions.into();
        let in_window = self.metrics.in_window(self.now);
        while let Some(action) = work.pop_front() {
            match action {
                Action::Transmit { packet, next_hop } => {
                    if let Some(hop) = next_hop {
                        if !self.graph.are_neighbors(node, hop) {
                            let mut extra = Vec::new();
                            let mut ctx = Ctx { now: self.now, rng: &mut self.forwarding_rng, out: &mut extra };
                            self.routers[node.index()].link_failure(&mut ctx, packet, hop);
                            work.extend(extra);
                            continue;
                        }
                    }
                    self.transmit(node, packet, next_hop, in_window);
                }
                Action::Schedule { at, timer } => self.queue.push(at, Event::Timer { node, timer }),
                Action::Deliver { packet } => {
                    if packet.created_at >= self.metrics.window_start {
                        self.metrics.data_delivered += 1;
                        self.metrics.data_bytes_delivered += packet.size() as u64;
                        let uid = packet.data().map_or(0, |d| d.uid);
                        self.metrics.deliveries.push(DeliveryRecord {
                            uid,
                            sent: packet.created_at,
                            received: self.now,
                        });
                    }
                }
                Action::Drop { packet, reason } => {
                    self.record(TraceEvent::Drop, node, &packet, Some(reason));
                    if reason.is_protocol_error() {
                        self.metrics.protocol_errors += 1;
                    }
                    if packet.kind() == PacketKind::Data && packet.created_at >= self.metrics.window_start {
                        *self.metrics.data_dropped.entry(reason).or_default() += 1;
                    }
                }
                Action::DiscoveryStarted { .. } => {
                    if in_window {
                        self.metrics.discoveries_started += 1;
                    }
                }
                Action::DiscoveryCompleted { .. } => {
                    if in_window {
                        self.metrics.discovery_successes += 1;
                    }
                }
                Action::DiscoveryFailed { .. } => {
                    if in_window {
                        self.metrics.discovery_failures += 1;
                    }
                }
            }
        }
    }

    fn transmit(&mut self, node: NodeId, packet: Packet, next_hop: Option<NodeId>, in_window: bool) {
        self.record(TraceEvent::Send, node, &packet, None);
        let kind = packet.kind();
        if in_window {
            if kind.is_control() {
                self.metrics.control.add(kind);
            } else {
                self.metrics.data_transmissions += 1;
            }
        }
        let at = self.now + self.cfg.hop_delay(packet.size());
        match next_hop {
            None => {
                for &n in self.graph.neighbors(node) {
                    self.queue.push(at, Event::Deliver { to: n, from: node, packet: packet.clone(), overheard: false });
                }
            }
            Some(hop) => {
                if self.cfg.protocol == Protocol::Dsr
                    && matches!(kind, PacketKind::Data | PacketKind::Rrep | PacketKind::Rerr)
                {
                    for &n in self.graph.neighbors(node) {
                        if n != hop {
                            self.queue.push(
                                at,
                                Event::Deliver { to: n, from: node, packet: packet.clone(), overheard: true },
                            );
                        }
                    }
                }
                self.queue.push(at, Event::Deliver { to: hop, from: node, packet, overheard: false });
            }
        }
    }
}

/// Run one scenario end to end.
pub fn run(config: &SimConfig, seed: u64) -> Result<RunOutput, ConfigError> {
    Ok(Simulator::new(config.clone(), seed)?.run())
}

#[cfg(test)]
mod tests;
