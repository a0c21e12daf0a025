//! Per-node reactive routing for AODV, DSR and DYMO under either ring variant.
//!
//! A [`Router`] owns one node's protocol state. The simulator feeds it
//! receptions, timer expiries and link-layer failures; the router answers by
//! pushing [`Action`]s (transmissions, timers, deliveries, drops) into the
//! context. Routers never touch the event queue directly.

mod cache;
mod table;

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;
use std::sync::Arc;
use std::time::Duration;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use cache::{RouteCache, SourceRoute};
pub use table::{RouteEntry, RouteTable};

use crate::analytics::{discovery_schedule, ErsParams, Protocol, TtlSchedule, Variant};
use crate::packet::{Body, Data, Packet, PacketKind, Rerr, Rrep, Rreq, DATA_PACKET_SIZE};
use crate::sim::SimTime;
use crate::topology::NodeId;

/// Destination of broadcast control packets.
pub const BROADCAST: NodeId = NodeId(u32::MAX);

/// Hop limit on unicast control packets and hop-by-hop data.
pub const UNICAST_TTL: u32 = 64;

const GRATUITOUS_HOLDOFF: Duration = Duration::from_secs(1);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("{feature} is not supported by {protocol}")]
    Unsupported { feature: &'static str, protocol: Protocol },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DropReason {
    /// Request already seen.
    Duplicate,
    /// Request reached the edge of its ring.
    TtlExhausted,
    /// Lost the rebroadcast coin.
    Suppressed,
    NoRoute,
    LinkBreak,
    QueueOverflow,
    DiscoveryFailed,
    RepairFailed,
    NoSalvage,
    /// Hop limit of a unicast packet ran out.
    HopLimit,
    /// Packet arrived with TTL 0.
    MalformedTtl,
    /// Source route does not name this node.
    Misrouted,
}

impl DropReason {
    pub fn code(self) -> &'static str {
        match self {
            DropReason::Duplicate => "dup",
            DropReason::TtlExhausted => "ttl",
            DropReason::Suppressed => "ps",
            DropReason::NoRoute => "noroute",
            DropReason::LinkBreak => "link",
            DropReason::QueueOverflow => "qfull",
            DropReason::DiscoveryFailed => "discfail",
            DropReason::RepairFailed => "repairfail",
            DropReason::NoSalvage => "nosalvage",
            DropReason::HopLimit => "hoplimit",
            DropReason::MalformedTtl => "badttl",
            DropReason::Misrouted => "misrouted",
        }
    }

    /// Drops that indicate a protocol fault rather than normal operation.
    pub fn is_protocol_error(self) -> bool {
        matches!(self, DropReason::MalformedTtl | DropReason::Misrouted)
    }
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Timer {
    Discovery { dest: NodeId, request_id: u32 },
    Repair { dest: NodeId, request_id: u32 },
    Hello,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    /// `next_hop: None` broadcasts to every current neighbor.
    Transmit {
        packet: Packet,
        next_hop: Option<NodeId>,
    },
    Schedule {
        at: SimTime,
        timer: Timer,
    },
    Deliver {
        packet: Packet,
    },
    Drop {
        packet: Packet,
        reason: DropReason,
    },
    DiscoveryStarted {
        dest: NodeId,
    },
    DiscoveryCompleted {
        dest: NodeId,
        latency: Duration,
    },
    DiscoveryFailed {
        dest: NodeId,
    },
}

/// Everything a handler needs from the engine for one call.
pub struct Ctx<'a> {
    pub now: SimTime,
    pub rng: &'a mut ChaCha8Rng,
    pub out: &'a mut Vec<Action>,
}

#[derive(Debug, Clone)]
pub struct RouterConfig {
    pub protocol: Protocol,
    pub variant: Variant,
    pub params: ErsParams,
    pub schedule: TtlSchedule,
    pub p_s: f64,
    pub route_lifetime: Duration,
    pub queue_capacity: usize,
    pub hello_loss: u32,
}

impl RouterConfig {
    pub fn new(protocol: Protocol, variant: Variant, params: ErsParams) -> crate::analytics::Result<Self> {
        let schedule = discovery_schedule(protocol, variant, &params)?;
        Ok(RouterConfig {
            protocol,
            variant,
            params,
            schedule,
            p_s: 1.0,
            route_lifetime: Duration::from_secs(10),
            queue_capacity: 64,
            hello_loss: 2,
        })
    }

    pub fn preset(protocol: Protocol, variant: Variant) -> Self {
        Self::new(protocol, variant, ErsParams::preset(protocol, variant)).expect("presets are valid")
    }

    fn hop_by_hop(&self) -> bool {
        !matches!(self.protocol, Protocol::Dsr)
    }
}

/// Progress of one expanding ring search.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveryState {
    pub destination: NodeId,
    pub ring_index: usize,
    pub ttl: u32,
    pub wait_deadline: SimTime,
    pub request_id: u32,
    pub started: SimTime,
}

/// AODV local repair in progress at an intermediate node.
#[derive(Debug, Clone)]
pub struct RepairState {
    pub request_id: u32,
    pub ttl: u32,
    pub deadline: SimTime,
    pub buffered: VecDeque<Packet>,
}

pub struct Router {
    id: NodeId,
    cfg: Arc<RouterConfig>,
    seq_no: u32,
    next_request_id: u32,
    seen: HashSet<(NodeId, u32)>,
    routes: RouteTable,
    cache: RouteCache,
    pending: BTreeMap<NodeId, DiscoveryState>,
    queues: BTreeMap<NodeId, VecDeque<Packet>>,
    repairs: BTreeMap<NodeId, RepairState>,
    neighbors: BTreeMap<NodeId, SimTime>,
    gratuitous_sent: HashMap<(NodeId, NodeId), SimTime>,
}

impl Router {
    pub fn new(id: NodeId, cfg: Arc<RouterConfig>) -> Self {
        let cache = RouteCache::new(cfg.params.tap_cache_size);
        Router {
            id,
            cfg,
            seq_no: 0,
            next_request_id: 0,
            seen: HashSet::new(),
            routes: RouteTable::default(),
            cache,
            pending: BTreeMap::new(),
            queues: BTreeMap::new(),
            repairs: BTreeMap::new(),
            neighbors: BTreeMap::new(),
            gratuitous_sent: HashMap::new(),
        }
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn config(&self) -> &RouterConfig {
        &self.cfg
    }

    pub fn pending(&self, dest: NodeId) -> Option<&DiscoveryState> {
        self.pending.get(&dest)
    }

    pub fn routes(&self) -> &RouteTable {
        &self.routes
    }

    pub fn cache(&self) -> &RouteCache {
        &self.cache
    }

    pub fn cache_mut(&mut self) -> &mut RouteCache {
        &mut self.cache
    }

    pub fn is_repairing(&self, dest: NodeId) -> bool {
        self.repairs.contains_key(&dest)
    }

    /// Data packets held while a discovery or repair is outstanding.
    pub fn queued_data(&self) -> impl Iterator<Item = &Packet> {
        self.queues.values().flatten().chain(self.repairs.values().flat_map(|r| r.buffered.iter()))
    }

    fn lifetime(&self, now: SimTime) -> SimTime {
        now + self.cfg.route_lifetime
    }

    fn transmit(ctx: &mut Ctx<'_>, packet: Packet, next_hop: Option<NodeId>) {
        ctx.out.push(Action::Transmit { packet, next_hop });
    }

    fn drop_packet(ctx: &mut Ctx<'_>, packet: Packet, reason: DropReason) {
        ctx.out.push(Action::Drop { packet, reason });
    }

    fn new_rreq(&mut self, ctx: &Ctx<'_>, dest: NodeId, ttl: u32, repair: bool) -> Packet {
        self.next_request_id += 1;
        let request_id = self.next_request_id;
        self.seen.insert((self.id, request_id));
        let hop_by_hop = self.cfg.hop_by_hop();
        if hop_by_hop {
            self.seq_no += 1;
        }
        Packet {
            src: self.id,
            dst: dest,
            ttl,
            created_at: ctx.now,
            body: Body::Rreq(Rreq {
                request_id,
                hop_count: 0,
                orig_seq: self.seq_no,
                dest_seq: if hop_by_hop { self.routes.get(dest).map(|e| e.seq) } else { None },
                repair,
                path: if hop_by_hop { Vec::new() } else { vec![self.id] },
            }),
        }
    }

    // ---------------------------------------------------------------- discovery

    /// Start an expanding ring search for `dest` and return the first-ring
    /// request. A search already in progress for `dest` absorbs the call.
    pub fn initiate_discovery(&mut self, ctx: &mut Ctx<'_>, dest: NodeId) -> Option<Packet> {
        if self.pending.contains_key(&dest) {
            return None;
        }
        let ttl = self.cfg.schedule.rings()[0];
        let rreq = self.new_rreq(ctx, dest, ttl, false);
        let request_id = rreq.request_id().expect("rreq");
        let wait_deadline = ctx.now + self.cfg.params.ring_wait(self.cfg.protocol, 0, ttl);
        self.pending.insert(
            dest,
            DiscoveryState { destination: dest, ring_index: 0, ttl, wait_deadline, request_id, started: ctx.now },
        );
        ctx.out.push(Action::DiscoveryStarted { dest });
        ctx.out.push(Action::Schedule { at: wait_deadline, timer: Timer::Discovery { dest, request_id } });
        Self::transmit(ctx, rreq.clone(), None);
        Some(rreq)
    }

    /// Ring wait expired without a reply: move to the next ring, or give up
    /// and drop everything queued for `dest` once the schedule is exhausted.
    pub fn handle_timeout(&mut self, ctx: &mut Ctx<'_>, dest: NodeId, request_id: u32) -> Option<Packet> {
        let state = self.pending.get(&dest)?;
        if state.request_id != request_id {
            return None;
        }
        let ring_index = state.ring_index + 1;
        if ring_index >= self.cfg.schedule.len() {
            self.pending.remove(&dest);
            for packet in self.queues.remove(&dest).unwrap_or_default() {
                Self::drop_packet(ctx, packet, DropReason::DiscoveryFailed);
            }
            ctx.out.push(Action::DiscoveryFailed { dest });
            return None;
        }
        let ttl = self.cfg.schedule.rings()[ring_index];
        let rreq = self.new_rreq(ctx, dest, ttl, false);
        let request_id = rreq.request_id().expect("rreq");
        let wait_deadline = ctx.now + self.cfg.params.ring_wait(self.cfg.protocol, ring_index, ttl);
        let state = self.pending.get_mut(&dest).expect("checked above");
        state.ring_index = ring_index;
        state.ttl = ttl;
        state.request_id = request_id;
        state.wait_deadline = wait_deadline;
        ctx.out.push(Action::Schedule { at: wait_deadline, timer: Timer::Discovery { dest, request_id } });
        Self::transmit(ctx, rreq.clone(), None);
        Some(rreq)
    }

    pub fn handle_timer(&mut self, ctx: &mut Ctx<'_>, timer: Timer) {
        match timer {
            Timer::Discovery { dest, request_id } => {
                self.handle_timeout(ctx, dest, request_id);
            }
            Timer::Repair { dest, request_id } => self.repair_timeout(ctx, dest, request_id),
            Timer::Hello => self.hello_tick(ctx),
        }
    }

    fn route_found(&mut self, ctx: &mut Ctx<'_>, dest: NodeId) {
        if let Some(state) = self.pending.remove(&dest) {
            ctx.out.push(Action::DiscoveryCompleted { dest, latency: ctx.now - state.started });
        }
        if let Some(repair) = self.repairs.remove(&dest) {
            for packet in repair.buffered {
                self.forward_hop_by_hop(ctx, packet);
            }
        }
        self.flush_queue(ctx, dest);
    }

    // ---------------------------------------------------------------- data plane

    /// Data handed down by the local traffic source.
    pub fn originate(&mut self, ctx: &mut Ctx<'_>, packet: Packet) {
        let dest = packet.dst;
        if dest == self.id {
            ctx.out.push(Action::Deliver { packet });
            return;
        }
        if self.queues.get(&dest).is_some_and(|q| !q.is_empty()) {
            self.enqueue(ctx, packet);
            self.initiate_discovery(ctx, dest);
            return;
        }
        if let Err(packet) = self.send_from_source(ctx, packet) {
            self.enqueue(ctx, packet);
            self.initiate_discovery(ctx, dest);
        }
    }

    fn send_from_source(&mut self, ctx: &mut Ctx<'_>, mut packet: Packet) -> Result<(), Packet> {
        let dest = packet.dst;
        if self.cfg.hop_by_hop() {
            let Some(entry) = self.routes.valid(dest, ctx.now) else { return Err(packet) };
            let next = entry.next_hop;
            let lifetime = self.lifetime(ctx.now);
            self.routes.touch(dest, lifetime);
            self.routes.touch(next, lifetime);
            Self::transmit(ctx, packet, Some(next));
            return Ok(());
        }
        let Some(route) = self.cache.find(dest, &[]) else { return Err(packet) };
        let nodes = route.into_nodes();
        let next = nodes[1];
        if let Body::Data(d) = &mut packet.body {
            d.route = nodes;
            d.hop_index = 0;
        }
        Self::transmit(ctx, packet, Some(next));
        Ok(())
    }

    fn enqueue(&mut self, ctx: &mut Ctx<'_>, packet: Packet) {
        let cap = self.cfg.queue_capacity;
        let queue = self.queues.entry(packet.dst).or_default();
        if queue.len() >= cap {
            if let Some(old) = queue.pop_front() {
                Self::drop_packet(ctx, old, DropReason::QueueOverflow);
            }
        }
        queue.push_back(packet);
    }

    fn flush_queue(&mut self, ctx: &mut Ctx<'_>, dest: NodeId) {
        let Some(mut queue) = self.queues.remove(&dest) else { return };
        while let Some(packet) = queue.pop_front() {
            if let Err(packet) = self.send_from_source(ctx, packet) {
                queue.push_front(packet);
                break;
            }
        }
        if !queue.is_empty() {
            self.queues.insert(dest, queue);
            self.initiate_discovery(ctx, dest);
        }
    }

    fn forward_hop_by_hop(&mut self, ctx: &mut Ctx<'_>, mut packet: Packet) {
        let dest = packet.dst;
        if packet.ttl <= 1 {
            Self::drop_packet(ctx, packet, DropReason::HopLimit);
            return;
        }
        if let Some(repair) = self.repairs.get_mut(&dest) {
            if repair.buffered.len() >= self.cfg.queue_capacity {
                if let Some(old) = repair.buffered.pop_front() {
                    Self::drop_packet(ctx, old, DropReason::QueueOverflow);
                }
            }
            repair.buffered.push_back(packet);
            return;
        }
        match self.routes.valid(dest, ctx.now) {
            Some(entry) => {
                let next = entry.next_hop;
                let lifetime = self.lifetime(ctx.now);
                self.routes.touch(dest, lifetime);
                self.routes.touch(packet.src, lifetime);
                packet.ttl -= 1;
                Self::transmit(ctx, packet, Some(next));
            }
            None => {
                let dest = packet.dst;
                Self::drop_packet(ctx, packet, DropReason::NoRoute);
                self.send_rerr(ctx, vec![dest]);
            }
        }
    }

    fn handle_data(&mut self, ctx: &mut Ctx<'_>, from: NodeId, mut packet: Packet) {
        if packet.dst == self.id {
            ctx.out.push(Action::Deliver { packet });
            return;
        }
        if self.cfg.hop_by_hop() {
            self.learn_neighbor(ctx.now, from);
            if let Some(e) = self.routes.get_mut(packet.dst) {
                e.precursors.insert(from);
            }
            self.forward_hop_by_hop(ctx, packet);
            return;
        }
        let Body::Data(data) = &mut packet.body else { unreachable!() };
        let idx = data.hop_index + 1;
        if data.route.get(idx) != Some(&self.id) || idx + 1 >= data.route.len() {
            Self::drop_packet(ctx, packet, DropReason::Misrouted);
            return;
        }
        data.hop_index = idx;
        let next = data.route[idx + 1];
        let route = data.route.clone();
        self.learn_route_at(ctx.now, &route, idx);
        Self::transmit(ctx, packet, Some(next));
    }

    /// A unicast from this node could not reach `next_hop`.
    pub fn link_failure(&mut self, ctx: &mut Ctx<'_>, packet: Packet, next_hop: NodeId) {
        if !self.cfg.hop_by_hop() {
            self.cache.remove_link(self.id, next_hop);
        }
        match packet.kind() {
            PacketKind::Data => self.data_link_failure(ctx, packet, next_hop),
            _ => {
                if self.cfg.hop_by_hop() {
                    self.neighbor_lost(ctx, next_hop, None);
                }
                Self::drop_packet(ctx, packet, DropReason::LinkBreak);
            }
        }
    }

    fn data_link_failure(&mut self, ctx: &mut Ctx<'_>, packet: Packet, next_hop: NodeId) {
        let dest = packet.dst;
        let at_source = packet.src == self.id;
        if self.cfg.hop_by_hop() {
            let last_hops = self.routes.get(dest).map(|e| e.hop_count).unwrap_or(1);
            if at_source {
                self.neighbor_lost(ctx, next_hop, None);
                self.queues.entry(dest).or_default().push_front(packet);
                self.initiate_discovery(ctx, dest);
            } else if self.cfg.protocol == Protocol::Aodv {
                self.neighbor_lost(ctx, next_hop, Some(dest));
                if !self.repairs.contains_key(&dest) {
                    self.local_repair(ctx, dest, last_hops).expect("AODV supports local repair");
                }
                self.repairs.get_mut(&dest).expect("repair started").buffered.push_back(packet);
            } else {
                self.neighbor_lost(ctx, next_hop, None);
                Self::drop_packet(ctx, packet, DropReason::LinkBreak);
            }
            return;
        }
        self.dsr_salvage(ctx, packet, next_hop);
    }

    /// DSR reaction to a broken link under a data packet: report the link to
    /// the source and try to reroute the packet from the local cache.
    pub fn dsr_salvage(&mut self, ctx: &mut Ctx<'_>, mut packet: Packet, next_hop: NodeId) {
        let dest = packet.dst;
        let Body::Data(data) = &mut packet.body else { return };
        let idx = data.hop_index;
        if idx == 0 {
            // still at the source: no error to report, just pick another route
            match self.cache.find(dest, &[]) {
                Some(route) => {
                    let nodes = route.into_nodes();
                    let next = nodes[1];
                    data.route = nodes;
                    Self::transmit(ctx, packet, Some(next));
                }
                None => {
                    self.queues.entry(dest).or_default().push_front(packet);
                    self.initiate_discovery(ctx, dest);
                }
            }
            return;
        }
        let mut back: Vec<NodeId> = data.route[..=idx].to_vec();
        back.reverse();
        let rerr = Packet {
            src: self.id,
            dst: data.route[0],
            ttl: UNICAST_TTL,
            created_at: ctx.now,
            body: Body::Rerr(Rerr {
                unreachable: Vec::new(),
                broken: Some((self.id, next_hop)),
                path: back.clone(),
                hop_index: 0,
            }),
        };
        Self::transmit(ctx, rerr, Some(back[1]));

        if data.salvaged < self.cfg.params.max_main_rexmt {
            if let Some(alt) = self.cache.find(dest, &data.route[..idx]) {
                let mut route = data.route[..idx].to_vec();
                route.extend(alt.into_nodes());
                let next = route[idx + 1];
                data.route = route;
                data.salvaged += 1;
                Self::transmit(ctx, packet, Some(next));
                return;
            }
        }
        Self::drop_packet(ctx, packet, DropReason::NoSalvage);
    }

    // ---------------------------------------------------------------- control plane

    pub fn receive(&mut self, ctx: &mut Ctx<'_>, from: NodeId, packet: Packet, overheard: bool) {
        if overheard {
            if !self.cfg.hop_by_hop() {
                self.overhear(ctx, from, &packet);
            }
            return;
        }
        match packet.kind() {
            PacketKind::Rreq => self.handle_rreq(ctx, from, packet),
            PacketKind::Rrep => self.handle_rrep(ctx, from, packet),
            PacketKind::Rerr => self.handle_rerr(ctx, from, packet),
            PacketKind::Hello => self.handle_hello(ctx, from),
            PacketKind::Data => self.handle_data(ctx, from, packet),
        }
    }

    fn learn_neighbor(&mut self, now: SimTime, neighbor: NodeId) {
        self.neighbors.insert(neighbor, now);
        let valid_until = now + self.cfg.params.hello_interval * self.cfg.hello_loss;
        let seq = self.routes.get(neighbor).map_or(0, |e| e.seq);
        self.routes.offer(neighbor, neighbor, 1, seq, valid_until, now);
    }

    /// Forward, answer or drop a route request.
    pub fn handle_rreq(&mut self, ctx: &mut Ctx<'_>, from: NodeId, mut packet: Packet) {
        if packet.ttl == 0 {
            Self::drop_packet(ctx, packet, DropReason::MalformedTtl);
            return;
        }
        let hop_by_hop = self.cfg.hop_by_hop();
        if hop_by_hop {
            self.learn_neighbor(ctx.now, from);
        }
        let orig = packet.src;
        let target = packet.dst;
        let Body::Rreq(rreq) = &mut packet.body else { unreachable!() };
        if orig == self.id || !self.seen.insert((orig, rreq.request_id)) {
            Self::drop_packet(ctx, packet, DropReason::Duplicate);
            return;
        }
        let lifetime = self.lifetime(ctx.now);
        if hop_by_hop {
            self.routes.offer(orig, from, rreq.hop_count + 1, rreq.orig_seq, lifetime, ctx.now);
        } else {
            rreq.path.push(self.id);
            let mut back = rreq.path.clone();
            back.reverse();
            self.cache.insert_nodes(back, ctx.now);
        }

        if target == self.id {
            let reply = if hop_by_hop {
                if let Some(ds) = rreq.dest_seq {
                    self.seq_no = self.seq_no.max(ds);
                }
                self.seq_no += 1;
                Rrep { hop_count: 0, dest_seq: self.seq_no, path: Vec::new(), hop_index: 0, gratuitous: false }
            } else {
                let path = rreq.path.clone();
                let hop_index = path.len() - 1;
                Rrep { hop_count: 0, dest_seq: 0, path, hop_index, gratuitous: false }
            };
            self.send_rrep(ctx, target, orig, reply);
            return;
        }

        match self.cfg.protocol {
            Protocol::Aodv => {
                let fresh_enough = |e: &RouteEntry| e.next_hop != from && rreq.dest_seq.is_none_or(|ds| e.seq >= ds);
                if let Some(entry) = self.routes.valid(target, ctx.now).filter(|e| fresh_enough(e)) {
                    let reply = Rrep {
                        hop_count: entry.hop_count,
                        dest_seq: entry.seq,
                        path: Vec::new(),
                        hop_index: 0,
                        gratuitous: false,
                    };
                    if let Some(e) = self.routes.get_mut(target) {
                        e.precursors.insert(from);
                    }
                    self.send_rrep(ctx, target, orig, reply);
                    return;
                }
            }
            Protocol::Dsr => {
                if let Some(cached) = self.cache.find(target, &rreq.path) {
                    let mut path = rreq.path.clone();
                    let hop_index = path.len() - 1;
                    path.extend_from_slice(&cached.nodes()[1..]);
                    let reply = Rrep { hop_count: 0, dest_seq: 0, path, hop_index, gratuitous: false };
                    self.send_rrep(ctx, target, orig, reply);
                    return;
                }
            }
            Protocol::Dymo => {}
        }

        if packet.ttl <= 1 {
            Self::drop_packet(ctx, packet, DropReason::TtlExhausted);
            return;
        }
        if self.cfg.p_s < 1.0 && ctx.rng.gen::<f64>() >= self.cfg.p_s {
            Self::drop_packet(ctx, packet, DropReason::Suppressed);
            return;
        }
        packet.ttl -= 1;
        if let Body::Rreq(rreq) = &mut packet.body {
            rreq.hop_count += 1;
        }
        Self::transmit(ctx, packet, None);
    }

    fn send_rrep(&mut self, ctx: &mut Ctx<'_>, target: NodeId, orig: NodeId, reply: Rrep) {
        let next = if self.cfg.hop_by_hop() {
            match self.routes.valid(orig, ctx.now) {
                Some(e) => e.next_hop,
                None => return,
            }
        } else {
            reply.path[reply.hop_index - 1]
        };
        let packet = Packet { src: target, dst: orig, ttl: UNICAST_TTL, created_at: ctx.now, body: Body::Rrep(reply) };
        Self::transmit(ctx, packet, Some(next));
    }

    fn handle_rrep(&mut self, ctx: &mut Ctx<'_>, from: NodeId, mut packet: Packet) {
        let target = packet.src;
        let orig = packet.dst;
        let now = ctx.now;
        let lifetime = self.lifetime(now);
        if self.cfg.hop_by_hop() {
            self.learn_neighbor(now, from);
            let Body::Rrep(rrep) = &mut packet.body else { unreachable!() };
            self.routes.offer(target, from, rrep.hop_count + 1, rrep.dest_seq, lifetime, now);
            if orig == self.id {
                self.route_found(ctx, target);
                return;
            }
            if packet.ttl <= 1 {
                Self::drop_packet(ctx, packet, DropReason::HopLimit);
                return;
            }
            let Some(next) = self.routes.valid(orig, now).map(|e| e.next_hop) else {
                Self::drop_packet(ctx, packet, DropReason::NoRoute);
                return;
            };
            if let Some(e) = self.routes.get_mut(target) {
                e.precursors.insert(next);
            }
            self.routes.touch(orig, lifetime);
            let Body::Rrep(rrep) = &mut packet.body else { unreachable!() };
            rrep.hop_count += 1;
            packet.ttl -= 1;
            Self::transmit(ctx, packet, Some(next));
            return;
        }

        let Body::Rrep(rrep) = &mut packet.body else { unreachable!() };
        let Some(idx) = rrep.hop_index.checked_sub(1).filter(|&i| rrep.path.get(i) == Some(&self.id)) else {
            Self::drop_packet(ctx, packet, DropReason::Misrouted);
            return;
        };
        let path = rrep.path.clone();
        self.learn_route_at(now, &path, idx);
        if idx == 0 {
            self.route_found(ctx, target);
            return;
        }
        rrep.hop_index = idx;
        Self::transmit(ctx, packet, Some(path[idx - 1]));
    }

    fn handle_rerr(&mut self, ctx: &mut Ctx<'_>, from: NodeId, mut packet: Packet) {
        let now = ctx.now;
        if self.cfg.hop_by_hop() {
            self.neighbors.insert(from, now);
            let Body::Rerr(rerr) = &packet.body else { unreachable!() };
            let mut lost = Vec::new();
            let mut upstream = false;
            for &dest in &rerr.unreachable {
                if self.routes.valid(dest, now).is_some_and(|e| e.next_hop == from) {
                    if let Some(e) = self.routes.invalidate(dest, now) {
                        upstream |= !e.precursors.is_empty();
                        lost.push(dest);
                    }
                }
            }
            if upstream {
                self.broadcast_rerr(ctx, lost);
            }
            return;
        }
        let Body::Rerr(rerr) = &mut packet.body else { unreachable!() };
        if let Some((a, b)) = rerr.broken {
            self.cache.remove_link(a, b);
        }
        let idx = rerr.hop_index + 1;
        if rerr.path.get(idx) != Some(&self.id) {
            Self::drop_packet(ctx, packet, DropReason::Misrouted);
            return;
        }
        if idx + 1 >= rerr.path.len() {
            return;
        }
        rerr.hop_index = idx;
        let next = rerr.path[idx + 1];
        Self::transmit(ctx, packet, Some(next));
    }

    fn send_rerr(&mut self, ctx: &mut Ctx<'_>, unreachable: Vec<NodeId>) {
        if self.cfg.hop_by_hop() && !unreachable.is_empty() {
            self.broadcast_rerr(ctx, unreachable);
        }
    }

    fn broadcast_rerr(&mut self, ctx: &mut Ctx<'_>, unreachable: Vec<NodeId>) {
        let packet = Packet {
            src: self.id,
            dst: BROADCAST,
            ttl: 1,
            created_at: ctx.now,
            body: Body::Rerr(Rerr { unreachable, broken: None, path: Vec::new(), hop_index: 0 }),
        };
        Self::transmit(ctx, packet, None);
    }

    /// Forget `neighbor`, invalidate the routes through it and tell upstream
    /// users. `keep` names a destination under local repair, left out of the
    /// error. Returns the invalidated routes.
    fn neighbor_lost(&mut self, ctx: &mut Ctx<'_>, neighbor: NodeId, keep: Option<NodeId>) -> Vec<RouteEntry> {
        self.neighbors.remove(&neighbor);
        let broken = self.routes.invalidate_via(neighbor, ctx.now);
        let report: Vec<NodeId> = broken
            .iter()
            .filter(|e| Some(e.destination) != keep && !e.precursors.is_empty())
            .map(|e| e.destination)
            .collect();
        if !report.is_empty() {
            self.broadcast_rerr(ctx, report);
        }
        broken
    }

    /// AODV repair of a route that broke at this intermediate node: a bounded
    /// request with TTL `last_hop_count + LOCAL_ADD_TTL`.
    pub fn local_repair(
        &mut self,
        ctx: &mut Ctx<'_>,
        dest: NodeId,
        last_hop_count: u32,
    ) -> Result<Packet, ProtocolError> {
        if self.cfg.protocol != Protocol::Aodv {
            return Err(ProtocolError::Unsupported { feature: "local repair", protocol: self.cfg.protocol });
        }
        let ttl = last_hop_count.max(1) + self.cfg.params.local_add_ttl;
        let rreq = self.new_rreq(ctx, dest, ttl, true);
        let request_id = rreq.request_id().expect("rreq");
        let deadline = ctx.now + self.cfg.params.ring_wait(Protocol::Aodv, 0, ttl);
        let buffered = self.repairs.remove(&dest).map(|r| r.buffered).unwrap_or_default();
        self.repairs.insert(dest, RepairState { request_id, ttl, deadline, buffered });
        ctx.out.push(Action::Schedule { at: deadline, timer: Timer::Repair { dest, request_id } });
        Self::transmit(ctx, rreq.clone(), None);
        Ok(rreq)
    }

    fn repair_timeout(&mut self, ctx: &mut Ctx<'_>, dest: NodeId, request_id: u32) {
        if self.repairs.get(&dest).map(|r| r.request_id) != Some(request_id) {
            return;
        }
        let repair = self.repairs.remove(&dest).expect("checked");
        for packet in repair.buffered {
            Self::drop_packet(ctx, packet, DropReason::RepairFailed);
        }
        self.broadcast_rerr(ctx, vec![dest]);
    }

    // ---------------------------------------------------------------- hello

    /// Periodic hello (AODV, DYMO): announce ourselves, then declare broken
    /// every neighbor silent for `hello_loss` intervals.
    pub fn hello_tick(&mut self, ctx: &mut Ctx<'_>) {
        if !self.cfg.protocol.uses_hello() {
            return;
        }
        let interval = self.cfg.params.hello_interval;
        let hello = Packet { src: self.id, dst: BROADCAST, ttl: 1, created_at: ctx.now, body: Body::Hello };
        Self::transmit(ctx, hello, None);

        let silence = interval * self.cfg.hello_loss;
        let dead: Vec<NodeId> =
            self.neighbors.iter().filter(|(_, &heard)| ctx.now - heard > silence).map(|(&n, _)| n).collect();
        for n in dead {
            let broken = self.neighbor_lost(ctx, n, None);
            if self.cfg.protocol == Protocol::Aodv {
                for e in broken.iter().filter(|e| !e.precursors.is_empty() && e.destination != n) {
                    if !self.repairs.contains_key(&e.destination) {
                        let _ = self.local_repair(ctx, e.destination, e.hop_count);
                    }
                }
            }
        }
        ctx.out.push(Action::Schedule { at: ctx.now + interval, timer: Timer::Hello });
    }

    fn handle_hello(&mut self, ctx: &mut Ctx<'_>, from: NodeId) {
        if self.cfg.hop_by_hop() {
            self.learn_neighbor(ctx.now, from);
        }
    }

    pub fn neighbor_table(&self) -> &BTreeMap<NodeId, SimTime> {
        &self.neighbors
    }

    // ---------------------------------------------------------------- DSR cache

    /// Learn from a source route in which this node sits at `idx`: the path
    /// ahead to the end of the route and the reversed path back to its start.
    fn learn_route_at(&mut self, now: SimTime, route: &[NodeId], idx: usize) {
        if self.cfg.hop_by_hop() {
            return;
        }
        if idx + 1 < route.len() {
            self.cache.insert_nodes(route[idx..].to_vec(), now);
        }
        if idx > 0 {
            let mut back = route[..=idx].to_vec();
            back.reverse();
            self.cache.insert_nodes(back, now);
        }
    }

    /// Record a source route seen on the air in the local cache.
    pub fn dsr_cache_update(&mut self, now: SimTime, observed: &[NodeId], sender_idx: usize) {
        let me = self.id;
        let ahead = &observed[sender_idx..];
        if !ahead.contains(&me) {
            let mut path = vec![me];
            path.extend_from_slice(ahead);
            self.cache.insert_nodes(path, now);
        }
        let behind = &observed[..=sender_idx];
        if !behind.contains(&me) {
            let mut path = vec![me];
            path.extend(behind.iter().rev());
            self.cache.insert_nodes(path, now);
        }
    }

    /// Promiscuous reception of a unicast not addressed to us (DSR).
    fn overhear(&mut self, ctx: &mut Ctx<'_>, from: NodeId, packet: &Packet) {
        match &packet.body {
            Body::Data(data) => {
                let i = data.hop_index;
                if data.route.get(i) != Some(&from) {
                    return;
                }
                self.dsr_cache_update(ctx.now, &data.route, i);
                self.dsr_gratuitous_rrep(ctx, &data.route, i);
            }
            Body::Rrep(rrep) => {
                if rrep.path.get(rrep.hop_index) == Some(&from) {
                    self.dsr_cache_update(ctx.now, &rrep.path, rrep.hop_index);
                }
            }
            Body::Rerr(rerr) => {
                if let Some((a, b)) = rerr.broken {
                    self.cache.remove_link(a, b);
                }
            }
            _ => {}
        }
    }

    /// Route shortening: when this node appears later in an overheard route
    /// than the next hop, the source is told about the shortcut.
    pub fn dsr_gratuitous_rrep(&mut self, ctx: &mut Ctx<'_>, route: &[NodeId], sender_idx: usize) -> Option<Packet> {
        let j = route.iter().position(|&n| n == self.id)?;
        if j <= sender_idx + 1 {
            return None;
        }
        let key = (route[0], route[route.len() - 1]);
        if let Some(&last) = self.gratuitous_sent.get(&key) {
            if ctx.now - last < GRATUITOUS_HOLDOFF {
                return None;
            }
        }
        self.gratuitous_sent.insert(key, ctx.now);
        let mut path = route[..=sender_idx].to_vec();
        path.extend_from_slice(&route[j..]);
        let hop_index = sender_idx + 1;
        let packet = Packet {
            src: key.1,
            dst: key.0,
            ttl: UNICAST_TTL,
            created_at: ctx.now,
            body: Body::Rrep(Rrep { hop_count: 0, dest_seq: 0, path: path.clone(), hop_index, gratuitous: true }),
        };
        Self::transmit(ctx, packet.clone(), Some(path[sender_idx]));
        Some(packet)
    }
}

/// Convenience for tests and probes: a data packet from `src` to `dst`.
pub fn data_packet(uid: u64, flow: u32, src: NodeId, dst: NodeId, now: SimTime) -> Packet {
    Packet {
        src,
        dst,
        ttl: UNICAST_TTL,
        created_at: now,
        body: Body::Data(Data { uid, flow, route: Vec::new(), hop_index: 0, salvaged: 0, size: DATA_PACKET_SIZE }),
    }
}
