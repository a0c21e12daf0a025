//! Control and data packets exchanged between routers.

use std::fmt;

use crate::sim::SimTime;
use crate::topology::NodeId;

pub const DATA_PACKET_SIZE: u32 = 512;
const RREQ_SIZE: u32 = 48;
const RREP_SIZE: u32 = 44;
const RERR_SIZE: u32 = 32;
const HELLO_SIZE: u32 = 44;
const ADDR_SIZE: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PacketKind {
    Rreq,
    Rrep,
    Rerr,
    Hello,
    Data,
}

impl PacketKind {
    pub fn is_control(self) -> bool {
        !matches!(self, PacketKind::Data)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PacketKind::Rreq => "RREQ",
            PacketKind::Rrep => "RREP",
            PacketKind::Rerr => "RERR",
            PacketKind::Hello => "HELLO",
            PacketKind::Data => "DATA",
        }
    }
}

impl fmt::Display for PacketKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rreq {
    pub request_id: u32,
    pub hop_count: u32,
    pub orig_seq: u32,
    pub dest_seq: Option<u32>,
    /// Issued by an AODV local repair.
    pub repair: bool,
    /// DSR: nodes traversed so far, originator first.
    pub path: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rrep {
    pub hop_count: u32,
    pub dest_seq: u32,
    /// DSR: complete source route, originator first.
    pub path: Vec<NodeId>,
    /// DSR: index in `path` of the node currently holding the reply.
    pub hop_index: usize,
    pub gratuitous: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rerr {
    /// AODV/DYMO: destinations that just became unreachable.
    pub unreachable: Vec<NodeId>,
    /// DSR: the link that failed.
    pub broken: Option<(NodeId, NodeId)>,
    /// DSR: route back to the data source, error detector first.
    pub path: Vec<NodeId>,
    pub hop_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Data {
    pub uid: u64,
    pub flow: u32,
    /// DSR source route, source first. Empty for hop-by-hop protocols.
    pub route: Vec<NodeId>,
    pub hop_index: usize,
    pub salvaged: u32,
    /// Payload size in bytes.
    pub size: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Rreq(Rreq),
    Rrep(Rrep),
    Rerr(Rerr),
    Hello,
    Data(Data),
}

/// A packet in flight. `src`/`dst` are the end-to-end endpoints: originator
/// and target for requests, target and originator for replies.
#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub src: NodeId,
    pub dst: NodeId,
    pub ttl: u32,
    pub created_at: SimTime,
    pub body: Body,
}

impl Packet {
    pub fn kind(&self) -> PacketKind {
        match self.body {
            Body::Rreq(_) => PacketKind::Rreq,
            Body::Rrep(_) => PacketKind::Rrep,
            Body::Rerr(_) => PacketKind::Rerr,
            Body::Hello => PacketKind::Hello,
            Body::Data(_) => PacketKind::Data,
        }
    }

    pub fn size(&self) -> u32 {
        match &self.body {
            Body::Rreq(r) => RREQ_SIZE + ADDR_SIZE * r.path.len() as u32,
            Body::Rrep(r) => RREP_SIZE + ADDR_SIZE * r.path.len() as u32,
            Body::Rerr(r) => RERR_SIZE + ADDR_SIZE * (r.unreachable.len() + r.path.len()) as u32,
            Body::Hello => HELLO_SIZE,
            Body::Data(d) => d.size,
        }
    }

    pub fn request_id(&self) -> Option<u32> {
        match &self.body {
            Body::Rreq(r) => Some(r.request_id),
            _ => None,
        }
    }

    pub fn data(&self) -> Option<&Data> {
        match &self.body {
            Body::Data(d) => Some(d),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn data_is_512_bytes_and_not_control() {
        let p = Packet {
            src: NodeId(0),
            dst: NodeId(1),
            ttl: 64,
            created_at: SimTime::ZERO,
            body: Body::Data(Data {
                uid: 0,
                flow: 0,
                route: vec![NodeId(0), NodeId(1)],
                hop_index: 0,
                salvaged: 0,
                size: DATA_PACKET_SIZE,
            }),
        };
        assert_eq!(p.size(), 512);
        assert!(!p.kind().is_control());
        assert!(PacketKind::Hello.is_control());
    }
}
