use std::collections::VecDeque;

use crate::sim::SimTime;
use crate::topology::NodeId;

/// Ordered node list, no repeats, at least two nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceRoute(Vec<NodeId>);

impl SourceRoute {
    pub fn new(nodes: Vec<NodeId>) -> Option<Self> {
        if nodes.len() < 2 {
            return None;
        }
        for (i, n) in nodes.iter().enumerate() {
            if nodes[i + 1..].contains(n) {
                return None;
            }
        }
        Some(SourceRoute(nodes))
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.0
    }

    pub fn into_nodes(self) -> Vec<NodeId> {
        self.0
    }

    pub fn hops(&self) -> usize {
        self.0.len() - 1
    }

    fn link_index(&self, a: NodeId, b: NodeId) -> Option<usize> {
        self.0.windows(2).position(|w| (w[0] == a && w[1] == b) || (w[0] == b && w[1] == a))
    }
}

#[derive(Debug, Clone)]
struct CachedRoute {
    route: SourceRoute,
    inserted: SimTime,
}

/// DSR path cache. Routes start at the owning node and carry no expiry
/// timer; only capacity eviction (oldest insertion first) and link-error
/// purges remove them.
#[derive(Debug, Clone)]
pub struct RouteCache {
    capacity: usize,
    entries: VecDeque<CachedRoute>,
}

impl RouteCache {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "cache capacity must be at least 1");
        RouteCache { capacity, entries: VecDeque::new() }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Insert `route`, evicting the oldest entries beyond capacity. A route
    /// already present is moved to the young end.
    pub fn insert(&mut self, route: SourceRoute, now: SimTime) {
        // hot routes are re-inserted constantly, so search from the young end
        if let Some(pos) = self.entries.iter().rposition(|c| c.route == route) {
            self.entries.remove(pos);
        }
        self.entries.push_back(CachedRoute { route, inserted: now });
        while self.entries.len() > self.capacity {
            self.entries.pop_front();
        }
    }

    pub fn insert_nodes(&mut self, nodes: Vec<NodeId>, now: SimTime) {
        if let Some(route) = SourceRoute::new(nodes) {
            self.insert(route, now);
        }
    }

    /// Shortest cached route to `dest` avoiding every node in `avoid`
    /// (the first node of a route is exempt). Ties go to the newest entry.
    pub fn find(&self, dest: NodeId, avoid: &[NodeId]) -> Option<SourceRoute> {
        let mut best: Option<&[NodeId]> = None;
        for entry in self.entries.iter().rev() {
            let nodes = entry.route.nodes();
            let Some(k) = nodes.iter().position(|&n| n == dest) else { continue };
            if k == 0 {
                continue;
            }
            let prefix = &nodes[..=k];
            if prefix[1..].iter().any(|n| avoid.contains(n)) {
                continue;
            }
            if best.is_none_or(|b| prefix.len() < b.len()) {
                best = Some(prefix);
            }
        }
        best.map(|p| SourceRoute(p.to_vec()))
    }

    /// Truncate every route at the link `a`-`b` (either direction). Returns
    /// the number of routes touched.
    pub fn remove_link(&mut self, a: NodeId, b: NodeId) -> usize {
        let mut touched = 0;
        self.entries.retain_mut(|c| match c.route.link_index(a, b) {
            Some(i) => {
                touched += 1;
                if i >= 1 {
                    c.route.0.truncate(i + 1);
                    true
                } else {
                    false
                }
            }
            None => true,
        });
        touched
    }

    pub fn routes(&self) -> impl Iterator<Item = (&SourceRoute, SimTime)> {
        self.entries.iter().map(|c| (&c.route, c.inserted))
    }

    pub fn contains_link(&self, a: NodeId, b: NodeId) -> bool {
        self.entries.iter().any(|c| c.route.link_index(a, b).is_some())
    }
}
