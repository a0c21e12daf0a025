//! Unit-disk topologies, hop-ring census and measured connectivity profiles.

use std::collections::VecDeque;
use std::fmt;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{ConnectivityProfile, LocationDistribution, RingPopulation, TtlSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("node {0} is not in the graph")]
    InvalidSource(NodeId),
    #[error("location distribution undefined for a single-node network")]
    UndefinedDistribution,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arena {
    pub width: f64,
    pub height: f64,
    pub radio_range: f64,
}

impl Default for Arena {
    fn default() -> Self {
        Arena { width: 1000.0, height: 1000.0, radio_range: 250.0 }
    }
}

impl Arena {
    pub fn contains(&self, p: Point) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }

    pub fn random_point<R: Rng>(&self, rng: &mut R) -> Point {
        Point { x: rng.gen::<f64>() * self.width, y: rng.gen::<f64>() * self.height }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Connectivity snapshot. Two nodes are neighbors iff their distance is at
/// most the radio range.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    positions: Vec<Point>,
    radio_range: f64,
    adjacency: Vec<Vec<NodeId>>,
}

impl Graph {
    pub fn from_positions(positions: Vec<Point>, radio_range: f64) -> Self {
        let n = positions.len();
        let mut adjacency = vec![Vec::new(); n];
        for i in 0..n {
            for j in (i + 1)..n {
                if positions[i].distance(positions[j]) <= radio_range {
                    adjacency[i].push(NodeId(j as u32));
                    adjacency[j].push(NodeId(i as u32));
                }
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Graph { positions, radio_range, adjacency }
    }

    /// Graph with explicit edges; positions are left at the origin.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in edges {
            assert!(a != b, "self-loop {a}");
            if !adjacency[a as usize].contains(&NodeId(b)) {
                adjacency[a as usize].push(NodeId(b));
                adjacency[b as usize].push(NodeId(a));
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Graph { positions: vec![Point::default(); n], radio_range: 0.0, adjacency }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn radio_range(&self) -> f64 {
        self.radio_range
    }

    pub fn neighbors(&self, node: NodeId) -> &[NodeId] {
        &self.adjacency[node.index()]
    }

    pub fn are_neighbors(&self, a: NodeId, b: NodeId) -> bool {
        a.index() < self.len() && self.adjacency[a.index()].binary_search(&b).is_ok()
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.adjacency[node.index()].len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().filter(move |j| j.index() > i).map(move |&j| (NodeId(i as u32), j)))
    }

    fn check(&self, node: NodeId) -> Result<(), TopologyError> {
        if node.index() < self.len() {
            Ok(())
        } else {
            Err(TopologyError::InvalidSource(node))
        }
    }

    /// BFS hop distances from `source`; `None` for unreachable nodes.
    pub fn hop_distances(&self, source: NodeId) -> Result<Vec<Option<u32>>, TopologyError> {
        self.check(source)?;
        let mut dist = vec![None; self.len()];
        dist[source.index()] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u.index()].expect("queued nodes have a distance");
            for &v in self.neighbors(u) {
                if dist[v.index()].is_none() {
                    dist[v.index()] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        Ok(dist)
    }

    pub fn is_connected(&self) -> bool {
        if self.is_empty() {
            return true;
        }
        self.hop_distances(NodeId(0)).map(|d| d.iter().all(Option::is_some)).unwrap_or(false)
    }

    /// Plain-text dump: one `id x y` line per node, then one `id id` line per edge.
    pub fn write_dump<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (i, p) in self.positions.iter().enumerate() {
            writeln!(out, "{i} {:.3} {:.3}", p.x, p.y)?;
        }
        for (a, b) in self.edges() {
            writeln!(out, "{a} {b}")?;
        }
        Ok(())
    }
}

/// `n` nodes placed uniformly over the arena from a stream seeded by `seed`.
pub fn generate_topology(seed: u64, n: usize, arena: &Arena) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions = (0..n).map(|_| arena.random_point(&mut rng)).collect();
    Graph::from_positions(positions, arena.radio_range)
}

/// First connected topology found by walking seeds `seed, seed+1, ...`.
/// Returns the seed that produced it.
pub fn generate_connected_topology(seed: u64, n: usize, arena: &Arena) -> (u64, Graph) {
    (seed..)
        .map(|s| (s, generate_topology(s, n, arena)))
        .find(|(_, g)| g.is_connected())
        .expect("unbounded seed search")
}

/// Node counts per exact hop distance from `source`.
pub fn bfs_rings(graph: &Graph, source: NodeId) -> Result<RingPopulation, TopologyError> {
    let dist = graph.hop_distances(source)?;
    let mut counts: Vec<u64> = Vec::new();
    for d in dist.into_iter().flatten().filter(|&d| d > 0) {
        let idx = d as usize - 1;
        if counts.len() <= idx {
            counts.resize(idx + 1, 0);
        }
        counts[idx] += 1;
    }
    Ok(RingPopulation { counts })
}

/// Measured forwarding degrees from `source`.
///
/// `d_f[j - 1]` is the mean, over nodes at hop `j - 1`, of their neighbors at
/// hop `j` (the fresh nodes each forwarder covers). `d_avg` is the mean of all
/// entries, i.e. the flooding average over the source's eccentricity.
pub fn connectivity_profile(graph: &Graph, source: NodeId, p_s: f64) -> Result<ConnectivityProfile, TopologyError> {
    let dist = graph.hop_distances(source)?;
    let ecc = dist.iter().flatten().copied().max().unwrap_or(0) as usize;
    let mut forwarders = vec![0u64; ecc];
    let mut fresh_links = vec![0u64; ecc];
    for (u, du) in dist.iter().enumerate() {
        let Some(du) = *du else { continue };
        let du = du as usize;
        if du >= ecc {
            continue;
        }
        forwarders[du] += 1;
        fresh_links[du] += graph.adjacency[u].iter().filter(|v| dist[v.index()] == Some(du as u32 + 1)).count() as u64;
    }
    let d_f: Vec<f64> = fresh_links.iter().zip(&forwarders).map(|(&l, &f)| l as f64 / f as f64).collect();
    let d_avg = if d_f.is_empty() { 0.0 } else { d_f.iter().sum::<f64>() / d_f.len() as f64 };
    Ok(ConnectivityProfile { p_s, d_avg, d_f })
}

/// Probability that a uniformly chosen other node is first found by each ring.
pub fn location_distribution(
    graph: &Graph,
    source: NodeId,
    schedule: &TtlSchedule,
) -> Result<LocationDistribution, TopologyError> {
    let dist = graph.hop_distances(source)?;
    if graph.len() < 2 {
        return Err(TopologyError::UndefinedDistribution);
    }
    let others = (graph.len() - 1) as f64;
    let mut p = vec![0.0; schedule.len()];
    for d in dist.into_iter().flatten().filter(|&d| d > 0) {
        if let Some(ring) = schedule.rings().iter().position(|&ttl| d <= ttl) {
            p[ring] += 1.0;
        }
    }
    for x in &mut p {
        *x /= others;
    }
    Ok(LocationDistribution::new(p).expect("census fractions form a distribution"))
}
