use std::collections::{BTreeMap, BTreeSet};

use crate::sim::SimTime;
use crate::topology::NodeId;

/// Hop-by-hop route used by AODV and DYMO.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteEntry {
    pub destination: NodeId,
    pub next_hop: NodeId,
    pub hop_count: u32,
    pub valid_until: SimTime,
    pub seq: u32,
    /// Upstream neighbors that forward traffic for `destination` through us.
    pub precursors: BTreeSet<NodeId>,
}

impl RouteEntry {
    pub fn is_valid(&self, now: SimTime) -> bool {
        now < self.valid_until
    }
}

#[derive(Debug, Clone, Default)]
pub struct RouteTable {
    entries: BTreeMap<NodeId, RouteEntry>,
}

impl RouteTable {
    pub fn get(&self, dest: NodeId) -> Option<&RouteEntry> {
        self.entries.get(&dest)
    }

    pub fn get_mut(&mut self, dest: NodeId) -> Option<&mut RouteEntry> {
        self.entries.get_mut(&dest)
    }

    /// Entry for `dest` if it may still be used at `now`.
    pub fn valid(&self, dest: NodeId, now: SimTime) -> Option<&RouteEntry> {
        self.entries.get(&dest).filter(|e| e.is_valid(now))
    }

    /// Install or refresh a route. A valid existing entry is replaced only by
    /// fresher information: a higher sequence number, or the same one with
    /// fewer hops. An invalidated entry takes any route at least as fresh as
    /// its (bumped) sequence number. Returns whether the table changed.
    pub fn offer(
        &mut self,
        dest: NodeId,
        next_hop: NodeId,
        hop_count: u32,
        seq: u32,
        valid_until: SimTime,
        now: SimTime,
    ) -> bool {
        match self.entries.get_mut(&dest) {
            Some(e) if e.is_valid(now) => {
                let fresher = seq > e.seq || (seq == e.seq && hop_count < e.hop_count);
                let same = e.next_hop == next_hop && e.hop_count == hop_count;
                if fresher {
                    e.next_hop = next_hop;
                    e.hop_count = hop_count;
                    e.seq = seq;
                    e.valid_until = e.valid_until.max(valid_until);
                    true
                } else {
                    if same {
                        e.valid_until = e.valid_until.max(valid_until);
                    }
                    false
                }
            }
            Some(e) if seq >= e.seq => {
                e.next_hop = next_hop;
                e.hop_count = hop_count;
                e.seq = seq;
                e.valid_until = valid_until;
                e.precursors.clear();
                true
            }
            Some(_) => false,
            None => {
                self.entries.insert(
                    dest,
                    RouteEntry {
                        destination: dest,
                        next_hop,
                        hop_count,
                        valid_until,
                        seq,
                        precursors: BTreeSet::new(),
                    },
                );
                true
            }
        }
    }

    /// Extend the lifetime of a route in use.
    pub fn touch(&mut self, dest: NodeId, valid_until: SimTime) {
        if let Some(e) = self.entries.get_mut(&dest) {
            e.valid_until = e.valid_until.max(valid_until);
        }
    }

    pub fn invalidate(&mut self, dest: NodeId, now: SimTime) -> Option<RouteEntry> {
        let e = self.entries.get_mut(&dest)?;
        if !e.is_valid(now) {
            return None;
        }
        e.valid_until = now;
        e.seq = e.seq.wrapping_add(1);
        Some(e.clone())
    }

    /// Invalidate every valid route whose next hop is `neighbor`.
    pub fn invalidate_via(&mut self, neighbor: NodeId, now: SimTime) -> Vec<RouteEntry> {
        let mut broken = Vec::new();
        for e in self.entries.values_mut() {
            if e.next_hop == neighbor && e.is_valid(now) {
                e.valid_until = now;
                e.seq = e.seq.wrapping_add(1);
                broken.push(e.clone());
            }
        }
        broken
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const T0: SimTime = SimTime(0);

    #[test]
    fn expired_routes_are_not_valid() {
        let mut t = RouteTable::default();
        t.offer(NodeId(5), NodeId(1), 2, 1, SimTime(100), T0);
        assert!(t.valid(NodeId(5), SimTime(99)).is_some());
        assert!(t.valid(NodeId(5), SimTime(100)).is_none());
    }

    #[test]
    fn invalidation_bumps_sequence_and_blocks_stale_offers() {
        let mut t = RouteTable::default();
        t.offer(NodeId(5), NodeId(1), 3, 4, SimTime(100), T0);
        assert_eq!(t.invalidate(NodeId(5), SimTime(10)).unwrap().seq, 5);
        assert!(!t.offer(NodeId(5), NodeId(2), 1, 4, SimTime(200), SimTime(20)));
        assert!(t.offer(NodeId(5), NodeId(2), 6, 5, SimTime(200), SimTime(20)));
        assert!(t.valid(NodeId(5), SimTime(30)).is_some());
    }

    #[test]
    fn fresher_replaces_stale_does_not() {
        let mut t = RouteTable::default();
        t.offer(NodeId(5), NodeId(1), 3, 4, SimTime(100), T0);
        assert!(!t.offer(NodeId(5), NodeId(2), 2, 3, SimTime(100), T0));
        assert!(t.offer(NodeId(5), NodeId(2), 2, 4, SimTime(100), T0));
        assert_eq!(t.get(NodeId(5)).unwrap().next_hop, NodeId(2));
    }

    #[test]
    fn invalidate_via_neighbor() {
        let mut t = RouteTable::default();
        t.offer(NodeId(5), NodeId(1), 3, 0, SimTime(100), T0);
        t.offer(NodeId(6), NodeId(1), 2, 0, SimTime(100), T0);
        t.offer(NodeId(7), NodeId(2), 2, 0, SimTime(100), T0);
        let broken = t.invalidate_via(NodeId(1), SimTime(10));
        assert_eq!(broken.iter().map(|e| e.destination).collect::<Vec<_>>(), [NodeId(5), NodeId(6)]);
        assert!(t.valid(NodeId(7), SimTime(10)).is_some());
    }
}
