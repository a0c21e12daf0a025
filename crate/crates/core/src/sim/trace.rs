use std::fmt;
use std::io::{self, Write};

use crate::packet::PacketKind;
use crate::protocol::{DropReason, BROADCAST};
use crate::topology::NodeId;

use super::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceEvent {
    Send,
    Recv,
    Drop,
}

impl TraceEvent {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceEvent::Send => "send",
            TraceEvent::Recv => "recv",
            TraceEvent::Drop => "drop",
        }
    }
}

/// One line of the event trace. `request_id` is kept for in-memory checks
/// and is not part of the text format.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub time: SimTime,
    pub event: TraceEvent,
    pub node: NodeId,
    pub kind: PacketKind,
    pub src: NodeId,
    pub dst: NodeId,
    pub ttl: u32,
    pub reason: Option<DropReason>,
    pub request_id: Option<u32>,
}

fn node(n: NodeId) -> String {
    if n == BROADCAST {
        "*".to_string()
    } else {
        n.to_string()
    }
}

/// `time kind node pkt_kind src dst ttl reason`
impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {} {} {} {} {}",
            self.time,
            self.event.as_str(),
            self.node,
            self.kind,
            node(self.src),
            node(self.dst),
            self.ttl,
            self.reason.map_or("-", DropReason::code)
        )
    }
}

pub fn write_trace<W: Write>(records: &[TraceRecord], mut out: W) -> io::Result<()> {
    for r in records {
        writeln!(out, "{r}")?;
    }
    Ok(())
}
