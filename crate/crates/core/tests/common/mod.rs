use std::collections::BTreeMap;

use ers_core::analytics::{Protocol, Variant};
use ers_core::packet::PacketKind;
use ers_core::sim::{SimConfig, SimTime, Simulator, TraceEvent};
use ers_core::topology::NodeId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A short randomized scenario.
pub fn random_scenario(case: u64) -> (SimConfig, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + case);
    let protocol = Protocol::ALL[rng.gen_range(0..3)];
    let variant = Variant::ALL[rng.gen_range(0..2)];
    let mut cfg = SimConfig::new(protocol, variant);
    cfg.nodes = rng.gen_range(8..=35);
    let side = rng.gen_range(400.0..1000.0);
    cfg.arena.width = side;
    cfg.arena.height = side;
    cfg.v_max = [0.0, 5.0, 30.0][rng.gen_range(0..3)];
    cfg.pause_time = rng.gen_range(0.0..20.0);
    cfg.duration = rng.gen_range(10.0..40.0);
    cfg.warmup = rng.gen_range(0.0..5.0);
    cfg.flows = rng.gen_range(1..=6);
    cfg.rate = rng.gen_range(1.0..8.0);
    cfg.p_s = if rng.gen_bool(0.3) { rng.gen_range(0.5..1.0) } else { 1.0 };
    cfg.queue_capacity = rng.gen_range(4..=64);
    cfg.trace = true;
    (cfg, rng.gen())
}

#[derive(Debug, Default)]
pub struct Violations {
    pub duplicate_rebroadcasts: usize,
    pub conservation: Option<String>,
    pub cache_overflows: usize,
    pub ttl_breaches: usize,
    /// Control sends in the trace that the load counter missed, or the reverse.
    pub control_recount: Option<String>,
}

impl Violations {
    pub fn is_clean(&self) -> bool {
        self.duplicate_rebroadcasts == 0
            && self.conservation.is_none()
            && self.cache_overflows == 0
            && self.ttl_breaches == 0
            && self.control_recount.is_none()
    }
}

/// Run `cfg` and check the invariants against the trace and the final state.
pub fn check_run(cfg: SimConfig, seed: u64) -> Violations {
    let mut v = Violations::default();
    let end = SimTime::from_secs_f64(cfg.duration);
    let step = SimTime::from_secs_f64(2.0);
    let mut sim = Simulator::new(cfg, seed).expect("valid scenario");
    let n = sim.graph().len();
    let mut t = SimTime::ZERO;
    while t < end {
        t = (t + step).min(end);
        sim.run_until(t);
        for i in 0..n {
            let cache = sim.router(NodeId(i as u32)).cache();
            if cache.len() > cache.capacity() {
                v.cache_overflows += 1;
            }
        }
    }
    let out = sim.finish();

    // (originator, request id) -> originating TTL, and per-node send counts
    let mut origin_ttl: BTreeMap<(NodeId, u32), u32> = BTreeMap::new();
    let mut sends: BTreeMap<(NodeId, NodeId, u32), usize> = BTreeMap::new();
    for r in out.trace.iter().filter(|r| r.event == TraceEvent::Send && r.kind == PacketKind::Rreq) {
        let id = r.request_id.expect("requests carry ids");
        *sends.entry((r.node, r.src, id)).or_default() += 1;
        if r.node == r.src {
            origin_ttl.insert((r.src, id), r.ttl);
        } else {
            match origin_ttl.get(&(r.src, id)) {
                Some(&t0) if r.ttl >= 1 && r.ttl < t0 => {}
                _ => v.ttl_breaches += 1,
            }
        }
    }
    v.duplicate_rebroadcasts = sends.values().filter(|&&c| c > 1).count();

    let m = &out.metrics;
    let traced =
        out.trace.iter().filter(|r| r.event == TraceEvent::Send && r.kind.is_control() && m.in_window(r.time)).count()
            as u64;
    if traced != m.control.total() {
        v.control_recount = Some(format!("trace has {traced} control sends, counter {}", m.control.total()));
    }
    let accounted = m.data_delivered + m.dropped_total() + m.data_in_flight;
    if m.data_sent != accounted {
        v.conservation = Some(format!(
            "sent {} != delivered {} + dropped {} + in flight {}",
            m.data_sent,
            m.data_delivered,
            m.dropped_total(),
            m.data_in_flight
        ));
    }
    v
}
