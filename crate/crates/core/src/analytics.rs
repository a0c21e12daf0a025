//! Closed-form expanding ring search model.
//!
//! Broadcast cost of blind flooding and of individual TTL-bounded rings,
//! total cost of a ring schedule, expected locating time, and the per-ring
//! waiting times the three reactive protocols use between rings. The
//! protocol constants live in [`ErsParams::preset`].

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    #[error("connectivity profile has {available} forwarding degrees, {needed} required")]
    InsufficientProfile { needed: usize, available: usize },
    #[error("ring population has {available} rings, {needed} required")]
    InsufficientRings { needed: usize, available: usize },
    #[error("TTL schedule is empty")]
    EmptySchedule,
    #[error("TTL must be at least 1")]
    ZeroTtl,
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParams { field: &'static str, reason: String },
    #[error("invalid location distribution: {0}")]
    InvalidDistribution(String),
}

pub type Result<T> = std::result::Result<T, AnalyticsError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Protocol {
    #[serde(rename = "AODV")]
    Aodv,
    #[serde(rename = "DSR")]
    Dsr,
    #[serde(rename = "DYMO")]
    Dymo,
}

impl Protocol {
    pub const ALL: [Protocol; 3] = [Protocol::Aodv, Protocol::Dsr, Protocol::Dymo];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Aodv => "AODV",
            Protocol::Dsr => "DSR",
            Protocol::Dymo => "DYMO",
        }
    }

    /// Hello-based neighbor sensing is used by AODV and DYMO only.
    pub fn uses_hello(self) -> bool {
        !matches!(self, Protocol::Dsr)
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "AODV" => Ok(Protocol::Aodv),
            "DSR" => Ok(Protocol::Dsr),
            "DYMO" => Ok(Protocol::Dymo),
            _ => Err(format!("unknown protocol `{s}` (expected AODV, DSR or DYMO)")),
        }
    }
}

/// Default (`Ers1`) or enhanced (`Ers2`) ring constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "ERS1")]
    Ers1,
    #[serde(rename = "ERS2")]
    Ers2,
}

impl Variant {
    pub const ALL: [Variant; 2] = [Variant::Ers1, Variant::Ers2];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Ers1 => "ERS1",
            Variant::Ers2 => "ERS2",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "ERS1" => Ok(Variant::Ers1),
            "ERS2" => Ok(Variant::Ers2),
            _ => Err(format!("unknown variant `{s}` (expected ERS1 or ERS2)")),
        }
    }
}

/// Protocol constants governing ring sizes, waits and repair.
///
/// One struct covers all three protocols; fields a protocol does not use
/// keep their preset values and are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct ErsParams {
    pub hello_interval: Duration,
    pub ttl_start: u32,
    pub ttl_increment: u32,
    pub ttl_threshold: u32,
    /// Network-wide TTL values used once the ramp passes the threshold.
    /// A single value for AODV, the escalation list for DYMO.
    pub net_diameter: Vec<u32>,
    pub node_traversal_time: Duration,
    /// Upper bound on any single ring wait (AODV, DYMO).
    pub net_traversal_time: Duration,
    /// AODV: extra network-wide attempts after the first.
    pub rreq_retries: u32,
    /// DYMO: total network-wide attempts.
    pub rreq_tries: u32,
    /// AODV local repair adds this to the last known hop count.
    pub local_add_ttl: u32,
    pub timeout_buffer: u32,
    /// DSR non-propagating request timeout, doubled on each further ring.
    pub nonprop_timeout: Duration,
    pub discovery_hop_limit: u32,
    pub max_main_rexmt: u32,
    pub tap_cache_size: usize,
}

impl ErsParams {
    pub fn preset(protocol: Protocol, variant: Variant) -> Self {
        let ers2 = variant == Variant::Ers2;
        let (start, increment, threshold) = match (protocol, ers2) {
            (Protocol::Dsr, false) => (1, 1, 1),
            (Protocol::Dsr, true) => (3, 1, 3),
            (_, false) => (2, 2, 7),
            (_, true) => (3, 3, 9),
        };
        let net_diameter = match (protocol, ers2) {
            (Protocol::Aodv, _) => vec![35],
            (Protocol::Dymo, false) => vec![10, 20],
            (Protocol::Dymo, true) => vec![20, 35, 75],
            (Protocol::Dsr, _) => vec![255],
        };
        let net_traversal_time = match (protocol, ers2) {
            (Protocol::Dymo, false) => Duration::from_millis(1920),
            (_, false) => Duration::from_millis(5600),
            (_, true) => Duration::from_millis(1100),
        };
        ErsParams {
            hello_interval: Duration::from_millis(1000),
            ttl_start: start,
            ttl_increment: increment,
            ttl_threshold: threshold,
            net_diameter,
            node_traversal_time: Duration::from_millis(if ers2 { 25 } else { 40 }),
            net_traversal_time,
            rreq_retries: 2,
            rreq_tries: 3,
            local_add_ttl: if ers2 { 1 } else { 2 },
            timeout_buffer: 2,
            nonprop_timeout: Duration::from_millis(if ers2 { 90 } else { 30 }),
            discovery_hop_limit: 255,
            max_main_rexmt: 2,
            tap_cache_size: if ers2 { 256 } else { 1024 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn bad(field: &'static str, reason: impl Into<String>) -> Result<()> {
            Err(AnalyticsError::InvalidParams { field, reason: reason.into() })
        }
        let durations = [
            ("hello_interval", self.hello_interval),
            ("node_traversal_time", self.node_traversal_time),
            ("net_traversal_time", self.net_traversal_time),
            ("nonprop_timeout", self.nonprop_timeout),
        ];
        for (field, d) in durations {
            if d.is_zero() {
                return bad(field, "must be positive");
            }
        }
        if self.ttl_start == 0 {
            return bad("ttl_start", "must be at least 1");
        }
        if self.ttl_increment == 0 {
            return bad("ttl_increment", "must be at least 1");
        }
        if self.ttl_start > self.ttl_threshold {
            return bad("ttl_start", "exceeds ttl_threshold");
        }
        if self.net_diameter.is_empty() {
            return bad("net_diameter", "needs at least one value");
        }
        if self.net_diameter.iter().any(|&d| d < self.ttl_threshold) {
            return bad("net_diameter", "below ttl_threshold");
        }
        if self.net_diameter.windows(2).any(|w| w[0] > w[1]) {
            return bad("net_diameter", "escalation values must not decrease");
        }
        if self.discovery_hop_limit < self.ttl_start {
            return bad("discovery_hop_limit", "below the first ring");
        }
        if self.tap_cache_size == 0 {
            return bad("tap_cache_size", "must be at least 1");
        }
        Ok(())
    }

    /// Ring traversal wait for AODV/DYMO: `2 * NODE_TRAVERSAL_TIME * (ttl + TIMEOUT_BUFFER)`.
    pub fn ring_traversal_wait(&self, ttl: u32) -> Result<Duration> {
        ring_traversal_wait(ttl, self)
    }

    /// Wait armed after transmitting ring `ring_index` (0-based) with TTL `ttl`.
    ///
    /// AODV/DYMO use the ring traversal time capped at `net_traversal_time`;
    /// DSR doubles the non-propagating timeout on every ring.
    pub fn ring_wait(&self, protocol: Protocol, ring_index: usize, ttl: u32) -> Duration {
        match protocol {
            Protocol::Dsr => dsr_ring_wait(ring_index, self.nonprop_timeout),
            Protocol::Aodv | Protocol::Dymo => {
                let rtt = ring_traversal_wait(ttl.max(1), self).expect("ttl clamped to 1");
                rtt.min(self.net_traversal_time)
            }
        }
    }
}

/// Ordered TTL values a discovery walks through.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TtlSchedule {
    rings: Vec<u32>,
    protocol: Protocol,
    variant: Variant,
}

impl TtlSchedule {
    pub fn new(protocol: Protocol, variant: Variant, rings: Vec<u32>) -> Result<Self> {
        if rings.is_empty() {
            return Err(AnalyticsError::EmptySchedule);
        }
        if rings.contains(&0) {
            return Err(AnalyticsError::ZeroTtl);
        }
        if rings.windows(2).any(|w| w[0] > w[1]) {
            return Err(AnalyticsError::InvalidParams {
                field: "rings",
                reason: "TTL values must not decrease".into(),
            });
        }
        Ok(TtlSchedule { rings, protocol, variant })
    }

    pub fn rings(&self) -> &[u32] {
        &self.rings
    }

    pub fn protocol(&self) -> Protocol {
        self.protocol
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn len(&self) -> usize {
        self.rings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rings.is_empty()
    }

    pub fn max_ttl(&self) -> u32 {
        *self.rings.last().expect("schedule is non-empty")
    }

    /// First `n` rings (at least one).
    pub fn truncated(&self, n: usize) -> TtlSchedule {
        let n = n.clamp(1, self.rings.len());
        TtlSchedule { rings: self.rings[..n].to_vec(), ..self.clone() }
    }

    /// Per-ring waits as the protocol engine arms them.
    pub fn waits(&self, params: &ErsParams) -> Vec<Duration> {
        self.rings.iter().enumerate().map(|(i, &ttl)| params.ring_wait(self.protocol, i, ttl)).collect()
    }

    /// Time until a discovery that never gets a reply gives up.
    pub fn total_wait(&self, params: &ErsParams) -> Duration {
        self.waits(params).into_iter().sum()
    }
}

impl fmt::Display for TtlSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, r) in self.rings.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{r}")?;
        }
        write!(f, "]")
    }
}

fn ttl_ramp(params: &ErsParams) -> Vec<u32> {
    let mut rings = Vec::new();
    let mut ttl = params.ttl_start;
    while ttl <= params.ttl_threshold {
        rings.push(ttl);
        ttl += params.ttl_increment;
    }
    rings
}

/// Canonical ring sequence for a protocol and variant.
///
/// AODV ramps from `ttl_start` by `ttl_increment` up to `ttl_threshold`, then
/// floods at `NET_DIAMETER` once plus `rreq_retries` times. DYMO ramps the same
/// way and then walks its escalation list once. DSR sends its non-propagating
/// ring followed by one flood at `discovery_hop_limit`.
pub fn build_schedule(protocol: Protocol, variant: Variant, params: &ErsParams) -> Result<TtlSchedule> {
    params.validate()?;
    let rings = match protocol {
        Protocol::Dsr => vec![params.ttl_start, params.discovery_hop_limit],
        Protocol::Aodv => {
            let mut rings = ttl_ramp(params);
            let net = *params.net_diameter.last().expect("validated non-empty");
            rings.extend(std::iter::repeat_n(net, 1 + params.rreq_retries as usize));
            rings
        }
        Protocol::Dymo => {
            let mut rings = ttl_ramp(params);
            rings.extend_from_slice(&params.net_diameter);
            rings
        }
    };
    TtlSchedule::new(protocol, variant, rings)
}

/// Ring sequence as walked by the route-discovery engine, including the
/// network-wide retransmissions (`MaxMainRexmt` for DSR, `RREQ_TRIES` for DYMO).
pub fn discovery_schedule(protocol: Protocol, variant: Variant, params: &ErsParams) -> Result<TtlSchedule> {
    let base = build_schedule(protocol, variant, params)?;
    let mut rings = base.rings;
    let last = *rings.last().expect("non-empty");
    match protocol {
        Protocol::Aodv => {}
        Protocol::Dsr => rings.extend(std::iter::repeat_n(last, params.max_main_rexmt as usize)),
        Protocol::Dymo => {
            let escalations = params.net_diameter.len();
            let missing = (params.rreq_tries as usize).saturating_sub(escalations);
            rings.extend(std::iter::repeat_n(last, missing));
        }
    }
    TtlSchedule::new(protocol, variant, rings)
}

/// Expected per-hop forwarding behavior of a topology.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectivityProfile {
    pub p_s: f64,
    pub d_avg: f64,
    /// `d_f[j - 1]` is the forwarding degree at hop `j`.
    pub d_f: Vec<f64>,
}

impl ConnectivityProfile {
    pub fn new(p_s: f64, d_avg: f64, d_f: Vec<f64>) -> Result<Self> {
        let profile = ConnectivityProfile { p_s, d_avg, d_f };
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_s) {
            return Err(AnalyticsError::InvalidParams { field: "p_s", reason: format!("{} outside [0, 1]", self.p_s) });
        }
        if self.d_avg.is_nan() || self.d_avg < 0.0 {
            return Err(AnalyticsError::InvalidParams { field: "d_avg", reason: "must be non-negative".into() });
        }
        if self.d_f.iter().any(|d| d.is_nan() || *d < 0.0) {
            return Err(AnalyticsError::InvalidParams { field: "d_f", reason: "entries must be non-negative".into() });
        }
        Ok(())
    }

    /// Extend `d_f` with zeros so rings up to `max_ttl` can be evaluated.
    /// Hops past the source's eccentricity have no forwarders.
    pub fn padded(&self, max_ttl: u32) -> Self {
        let mut out = self.clone();
        let need = max_ttl.saturating_sub(1) as usize;
        if out.d_f.len() < need {
            out.d_f.resize(need, 0.0);
        }
        out
    }
}

/// `counts[i - 1]` = number of nodes at exact hop distance `i` from a source.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RingPopulation {
    pub counts: Vec<u64>,
}

impl RingPopulation {
    pub fn reachable(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Extend with empty rings out to hop `max_ttl - 1`.
    pub fn padded(&self, max_ttl: u32) -> Self {
        let mut out = self.clone();
        let need = max_ttl.saturating_sub(1) as usize;
        if out.counts.len() < need {
            out.counts.resize(need, 0);
        }
        out
    }
}

/// `p[i - 1]` = probability the destination is first found by ring `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocationDistribution {
    p: Vec<f64>,
}

impl LocationDistribution {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(AnalyticsError::InvalidDistribution("threshold must be at least 1".into()));
        }
        if p.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(AnalyticsError::InvalidDistribution("probabilities must lie in [0, 1]".into()));
        }
        let total: f64 = p.iter().sum();
        if total > 1.0 + 1e-9 {
            return Err(AnalyticsError::InvalidDistribution(format!("masses sum to {total} > 1")));
        }
        Ok(LocationDistribution { p })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    /// Search threshold `L`.
    pub fn threshold(&self) -> usize {
        self.p.len()
    }

    pub fn total_mass(&self) -> f64 {
        self.p.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegreeMode {
    /// Average over the whole network diameter `k_N`.
    Flooding,
    /// Average over the `M` rings of a search.
    Ers,
}

/// Average degree over the first `horizon` forwarding degrees.
///
/// Both modes compute the same mean; they differ only in which horizon the
/// caller passes (`k_N` for flooding, `M` for a ring search).
pub fn avg_degree(d_f: &[f64], _mode: DegreeMode, horizon: usize) -> Result<f64> {
    if horizon == 0 {
        return Err(AnalyticsError::InvalidParams { field: "horizon", reason: "must be at least 1".into() });
    }
    if d_f.len() < horizon {
        return Err(AnalyticsError::InsufficientProfile { needed: horizon, available: d_f.len() });
    }
    Ok(d_f[..horizon].iter().sum::<f64>() / horizon as f64)
}

/// Expected broadcast cost of flooding the whole network of diameter `k_n`.
pub fn blind_flood_cost(profile: &ConnectivityProfile, k_n: u32) -> Result<f64> {
    if k_n == 0 {
        return Err(AnalyticsError::ZeroTtl);
    }
    let needed = (k_n - 1) as usize;
    if profile.d_f.len() < needed {
        return Err(AnalyticsError::InsufficientProfile { needed, available: profile.d_f.len() });
    }
    let first = profile.p_s * profile.d_avg;
    if k_n == 1 {
        return Ok(first);
    }
    let mut sum = 0.0;
    let mut product = 1.0;
    for i in 1..k_n as usize {
        product *= profile.d_f[i - 1];
        sum += profile.p_s.powi(i as i32 + 1) * product;
    }
    Ok(first + profile.d_avg * sum)
}

/// Ring cost `B_k = 1 + sum_{i < k} n_i`: the source plus every node inside
/// the ring that rebroadcasts.
pub fn ring_cost_simple(rings: &RingPopulation, k: u32) -> Result<u64> {
    if k == 0 {
        return Err(AnalyticsError::ZeroTtl);
    }
    let needed = (k - 1) as usize;
    if rings.counts.len() < needed {
        return Err(AnalyticsError::InsufficientRings { needed, available: rings.counts.len() });
    }
    Ok(1 + rings.counts[..needed].iter().sum::<u64>())
}

/// Expected cost of one ring bounded by `ttl`, in terms of `P_S`, `d_avg` and `d_f`.
pub fn ring_cost_ttl(profile: &ConnectivityProfile, ttl: u32) -> Result<f64> {
    if ttl == 0 {
        return Err(AnalyticsError::ZeroTtl);
    }
    let inner = (ttl - 1) as usize;
    if profile.d_f.len() < inner {
        return Err(AnalyticsError::InsufficientProfile { needed: inner, available: profile.d_f.len() });
    }
    let base = profile.p_s * profile.d_avg;
    if ttl == 1 {
        return Ok(base);
    }
    let mut acc = 0.0;
    let mut forwarders = 1.0;
    for hop in 1..=inner {
        forwarders *= profile.d_f[hop - 1];
        acc += profile.p_s.powi(hop as i32 + 1) * forwarders;
    }
    Ok(base + profile.d_avg * acc)
}

/// Cost of a whole schedule, `B_M = sum_i B_k(i)`.
pub fn total_search_cost(schedule: &TtlSchedule, profile: &ConnectivityProfile) -> Result<f64> {
    if schedule.rings.is_empty() {
        return Err(AnalyticsError::EmptySchedule);
    }
    schedule.rings.iter().map(|&ttl| ring_cost_ttl(profile, ttl)).sum()
}

/// Same as [`total_search_cost`] over a bare TTL list.
pub fn rings_cost(rings: &[u32], profile: &ConnectivityProfile) -> Result<f64> {
    if rings.is_empty() {
        return Err(AnalyticsError::EmptySchedule);
    }
    rings.iter().map(|&ttl| ring_cost_ttl(profile, ttl)).sum()
}

/// Expected locating time with a fixed per-ring timeout `t` (seconds):
/// `T * sum (i-1) P(i) - L T sum P(i) + L T + T/2`.
pub fn expected_locating_time(t: f64, dist: &LocationDistribution) -> Result<f64> {
    if t.is_nan() || t <= 0.0 {
        return Err(AnalyticsError::InvalidParams { field: "T", reason: "timeout must be positive".into() });
    }
    let l = dist.threshold() as f64;
    let weighted: f64 = dist.p.iter().enumerate().map(|(i, p)| i as f64 * p).sum();
    let mass: f64 = dist.p.iter().sum();
    Ok(t * weighted - l * t * mass + l * t + 0.5 * t)
}

/// Cumulative DSR wait over `m` rings: `tau * (2^m - 1)`.
pub fn dsr_expected_wait(m: u32, tau: Duration) -> Duration {
    if m == 1 {
        return tau;
    }
    (1..=m).map(|k| tau * (1u32 << (k - 1))).sum()
}

/// Wait armed after DSR ring `ring_index` (0-based): `tau * 2^ring_index`.
pub fn dsr_ring_wait(ring_index: usize, tau: Duration) -> Duration {
    tau * (1u32 << ring_index.min(31))
}

/// `tau1 * (ttl + tau2)` with `tau1 = 2 * NODE_TRAVERSAL_TIME`, `tau2 = TIMEOUT_BUFFER`.
pub fn ring_traversal_wait(ttl: u32, params: &ErsParams) -> Result<Duration> {
    if ttl == 0 {
        return Err(AnalyticsError::ZeroTtl);
    }
    Ok(params.node_traversal_time * 2 * (ttl + params.timeout_buffer))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdChoice {
    pub threshold: usize,
    pub expected_cost: f64,
    /// Expected locating time for the chosen threshold, in seconds.
    pub expected_time: f64,
}

/// Expected broadcast cost of a search that tries rings with TTL `1..=l`
/// before falling back to a full flood.
///
/// A search that succeeds at ring `i` pays for rings `1..=i`; a search that
/// fails every ring pays for all `l` rings plus the network-wide flood.
pub fn threshold_cost(profile: &ConnectivityProfile, dist: &LocationDistribution, l: usize) -> Result<f64> {
    let flood = blind_flood_cost(profile, profile.d_f.len().max(1) as u32)?;
    let p = dist.probabilities();
    let mut cumulative_cost = 0.0;
    let mut expected = 0.0;
    let mut found = 0.0;
    for ring in 1..=l {
        cumulative_cost += ring_cost_ttl(profile, ring as u32)?;
        let p_i = p.get(ring - 1).copied().unwrap_or(0.0);
        expected += p_i * cumulative_cost;
        found += p_i;
    }
    Ok(expected + (1.0 - found).max(0.0) * (cumulative_cost + flood))
}

/// Exhaustive search for the ring threshold `L` in `1..=max_l` minimizing
/// expected broadcast cost; ties go to the smaller threshold.
pub fn optimal_threshold(
    profile: &ConnectivityProfile,
    dist: &LocationDistribution,
    t: f64,
    max_l: usize,
) -> Result<ThresholdChoice> {
    if max_l == 0 {
        return Err(AnalyticsError::InvalidParams { field: "max_l", reason: "must be at least 1".into() });
    }
    let mut best: Option<(usize, f64)> = None;
    for l in 1..=max_l {
        let cost = threshold_cost(profile, dist, l)?;
        if best.is_none_or(|(_, c)| cost < c) {
            best = Some((l, cost));
        }
    }
    let (threshold, expected_cost) = best.expect("max_l >= 1");
    let mut truncated: Vec<f64> = dist.probabilities().iter().copied().take(threshold).collect();
    truncated.resize(threshold, 0.0);
    let expected_time = expected_locating_time(t, &LocationDistribution::new(truncated)?)?;
    Ok(ThresholdChoice { threshold, expected_cost, expected_time })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ms(v: u64) -> Duration {
        Duration::from_millis(v)
    }

    fn schedule(p: Protocol, v: Variant) -> Vec<u32> {
        build_schedule(p, v, &ErsParams::preset(p, v)).unwrap().rings().to_vec()
    }

    #[test]
    fn canonical_schedules() {
        assert_eq!(schedule(Protocol::Aodv, Variant::Ers1), [2, 4, 6, 35, 35, 35]);
        assert_eq!(schedule(Protocol::Aodv, Variant::Ers2), [3, 6, 9, 35, 35, 35]);
        assert_eq!(schedule(Protocol::Dsr, Variant::Ers1), [1, 255]);
        assert_eq!(schedule(Protocol::Dsr, Variant::Ers2), [3, 255]);
        assert_eq!(schedule(Protocol::Dymo, Variant::Ers1), [2, 4, 6, 10, 20]);
        assert_eq!(schedule(Protocol::Dymo, Variant::Ers2), [3, 6, 9, 20, 35, 75]);
    }

    #[test]
    fn discovery_schedules_add_retries() {
        let ds = |p, v| discovery_schedule(p, v, &ErsParams::preset(p, v)).unwrap().rings().to_vec();
        assert_eq!(ds(Protocol::Dsr, Variant::Ers1), [1, 255, 255, 255]);
        assert_eq!(ds(Protocol::Dsr, Variant::Ers2), [3, 255, 255, 255]);
        assert_eq!(ds(Protocol::Dymo, Variant::Ers1), [2, 4, 6, 10, 20, 20]);
        assert_eq!(ds(Protocol::Dymo, Variant::Ers2), [3, 6, 9, 20, 35, 75]);
        assert_eq!(ds(Protocol::Aodv, Variant::Ers1), [2, 4, 6, 35, 35, 35]);
    }

    #[test]
    fn ers2_first_ring_is_larger() {
        for p in Protocol::ALL {
            assert!(schedule(p, Variant::Ers2)[0] > schedule(p, Variant::Ers1)[0], "{p}");
        }
    }

    #[test]
    fn invalid_params_rejected() {
        let mut params = ErsParams::preset(Protocol::Aodv, Variant::Ers1);
        params.ttl_start = 9;
        assert!(matches!(
            build_schedule(Protocol::Aodv, Variant::Ers1, &params),
            Err(AnalyticsError::InvalidParams { field: "ttl_start", .. })
        ));
        let mut params = ErsParams::preset(Protocol::Dsr, Variant::Ers2);
        params.tap_cache_size = 0;
        assert!(params.validate().is_err());
        let mut params = ErsParams::preset(Protocol::Dymo, Variant::Ers2);
        params.node_traversal_time = Duration::ZERO;
        assert!(params.validate().is_err());
    }

    #[test]
    fn avg_degree_examples() {
        assert_eq!(avg_degree(&[4.0, 4.0, 4.0], DegreeMode::Flooding, 3).unwrap(), 4.0);
        assert_eq!(avg_degree(&[6.0, 4.0, 2.0], DegreeMode::Ers, 2).unwrap(), 5.0);
        assert_eq!(avg_degree(&[7.0], DegreeMode::Ers, 1).unwrap(), 7.0);
        assert_eq!(
            avg_degree(&[7.0], DegreeMode::Flooding, 2),
            Err(AnalyticsError::InsufficientProfile { needed: 2, available: 1 })
        );
    }

    #[test]
    fn flood_cost_examples() {
        let p = ConnectivityProfile::new(0.5, 6.0, vec![]).unwrap();
        assert_eq!(blind_flood_cost(&p, 1).unwrap(), 3.0);
        let p = ConnectivityProfile::new(1.0, 4.0, vec![3.0]).unwrap();
        assert_eq!(blind_flood_cost(&p, 2).unwrap(), 16.0);
        let p = ConnectivityProfile::new(0.0, 5.0, vec![3.0, 2.0, 9.0]).unwrap();
        for k in 1..=4 {
            assert_eq!(blind_flood_cost(&p, k).unwrap(), 0.0);
        }
        let p = ConnectivityProfile::new(1.0, 4.0, vec![3.0]).unwrap();
        assert!(matches!(blind_flood_cost(&p, 3), Err(AnalyticsError::InsufficientProfile { .. })));
    }

    #[test]
    fn ring_cost_examples() {
        let rings = RingPopulation { counts: vec![4, 8] };
        assert_eq!(ring_cost_simple(&rings, 1).unwrap(), 1);
        assert_eq!(ring_cost_simple(&rings, 3).unwrap(), 13);
        assert_eq!(ring_cost_simple(&RingPopulation { counts: vec![5] }, 2).unwrap(), 6);
        assert!(ring_cost_simple(&rings, 4).is_err());

        let p = ConnectivityProfile::new(0.8, 5.0, vec![]).unwrap();
        assert_eq!(ring_cost_ttl(&p, 1).unwrap(), 4.0);
        let p = ConnectivityProfile::new(1.0, 4.0, vec![3.0]).unwrap();
        assert_eq!(ring_cost_ttl(&p, 2).unwrap(), 16.0);
    }

    #[test]
    fn total_cost_examples() {
        let p = ConnectivityProfile::new(1.0, 4.0, vec![3.0]).unwrap();
        let one = TtlSchedule::new(Protocol::Aodv, Variant::Ers1, vec![1]).unwrap();
        assert_eq!(total_search_cost(&one, &p).unwrap(), 4.0);
        let two = TtlSchedule::new(Protocol::Aodv, Variant::Ers1, vec![1, 2]).unwrap();
        assert_eq!(total_search_cost(&two, &p).unwrap(), 20.0);
        assert_eq!(TtlSchedule::new(Protocol::Aodv, Variant::Ers1, vec![]), Err(AnalyticsError::EmptySchedule));
        assert_eq!(rings_cost(&[], &p), Err(AnalyticsError::EmptySchedule));
    }

    #[test]
    fn locating_time_examples() {
        let one = LocationDistribution::new(vec![1.0]).unwrap();
        assert_eq!(expected_locating_time(0.1, &one).unwrap(), 0.05);
        let half = LocationDistribution::new(vec![0.5, 0.5]).unwrap();
        assert!((expected_locating_time(0.1, &half).unwrap() - 0.1).abs() < 1e-15);
        let zero = LocationDistribution::new(vec![0.0; 4]).unwrap();
        assert_eq!(expected_locating_time(0.1, &zero).unwrap(), (4.0 + 0.5) * 0.1);
        assert!(expected_locating_time(0.0, &one).is_err());
        assert!(LocationDistribution::new(vec![0.7, 0.7]).is_err());
    }

    #[test]
    fn dsr_wait_examples() {
        assert_eq!(dsr_expected_wait(1, ms(30)), ms(30));
        assert_eq!(dsr_expected_wait(3, ms(30)), ms(210));
        assert_eq!(dsr_expected_wait(2, ms(90)), ms(270));
        assert_eq!(dsr_ring_wait(1, ms(30)), ms(60));
    }

    #[test]
    fn ring_traversal_examples() {
        let ers1 = ErsParams::preset(Protocol::Aodv, Variant::Ers1);
        let ers2 = ErsParams::preset(Protocol::Aodv, Variant::Ers2);
        assert_eq!(ring_traversal_wait(2, &ers1).unwrap(), ms(320));
        assert_eq!(ring_traversal_wait(3, &ers2).unwrap(), ms(250));
        assert_eq!(ring_traversal_wait(0, &ers1), Err(AnalyticsError::ZeroTtl));
        // network-wide rings are capped at NET_TRAVERSAL_TIME
        assert_eq!(ers2.ring_wait(Protocol::Aodv, 3, 35), ms(1100));
        assert_eq!(ers1.ring_wait(Protocol::Aodv, 3, 35), ms(2960));
    }

    #[test]
    fn threshold_always_first_ring() {
        let p = ConnectivityProfile::new(1.0, 3.0, vec![3.0, 2.0, 2.0]).unwrap();
        let dist = LocationDistribution::new(vec![1.0, 0.0, 0.0]).unwrap();
        let choice = optimal_threshold(&p, &dist, 0.1, 3).unwrap();
        assert_eq!(choice.threshold, 1);
        assert_eq!(optimal_threshold(&p, &dist, 0.1, 1).unwrap().threshold, 1);
    }

    #[test]
    fn threshold_two_ring_hand_cases() {
        // d_avg = 2, d_f = [1, 5], P_S = 1:
        //   ring(1) = 2, ring(2) = 2 + 2*1 = 4, flood(k_N = 2) = 4.
        let p = ConnectivityProfile::new(1.0, 2.0, vec![1.0, 5.0]).unwrap();
        // Destination always in ring 2:
        //   L=1: 0 * 2 + 1 * (2 + 4) = 6
        //   L=2: 1 * (2 + 4) = 6  -> tie, smaller L wins
        let dist = LocationDistribution::new(vec![0.0, 1.0]).unwrap();
        assert_eq!(threshold_cost(&p, &dist, 1).unwrap(), 6.0);
        assert_eq!(threshold_cost(&p, &dist, 2).unwrap(), 6.0);
        assert_eq!(optimal_threshold(&p, &dist, 0.1, 2).unwrap().threshold, 1);
        // Half in ring 1, half beyond every ring:
        //   L=1: 0.5*2 + 0.5*(2 + 4) = 4
        //   L=2: 0.5*2 + 0.5*(6 + 4) = 6
        let dist = LocationDistribution::new(vec![0.5, 0.0]).unwrap();
        let choice = optimal_threshold(&p, &dist, 0.1, 2).unwrap();
        assert_eq!(choice.threshold, 1);
        assert_eq!(choice.expected_cost, 4.0);
    }
}
