use std::collections::BTreeMap;

use crate::packet::PacketKind;
use crate::protocol::DropReason;

use super::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeliveryRecord {
    pub uid: u64,
    pub sent: SimTime,
    pub received: SimTime,
}

/// Control transmissions per kind, one count per hop.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ControlCounts {
    pub rreq: u64,
    pub rrep: u64,
    pub rerr: u64,
    pub hello: u64,
}

impl ControlCounts {
    pub fn total(&self) -> u64 {
        self.rreq + self.rrep + self.rerr + self.hello
    }

    pub fn add(&mut self, kind: PacketKind) {
        match kind {
            PacketKind::Rreq => self.rreq += 1,
            PacketKind::Rrep => self.rrep += 1,
            PacketKind::Rerr => self.rerr += 1,
            PacketKind::Hello => self.hello += 1,
            PacketKind::Data => {}
        }
    }
}

/// Counters accumulated over the measurement window. Data packets count
/// when created inside the window; control transmissions when sent inside it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsRecord {
    pub window_start: SimTime,
    pub window_end: SimTime,
    pub data_sent: u64,
    pub data_delivered: u64,
    pub data_bytes_delivered: u64,
    pub data_dropped: BTreeMap<DropReason, u64>,
    /// Data still queued or on the air when the run stopped.
    pub data_in_flight: u64,
    pub deliveries: Vec<DeliveryRecord>,
    pub control: ControlCounts,
    pub data_transmissions: u64,
    pub discoveries_started: u64,
    pub discovery_successes: u64,
    pub discovery_failures: u64,
    pub protocol_errors: u64,
}

impl MetricsRecord {
    pub fn dropped_total(&self) -> u64 {
        self.data_dropped.values().sum()
    }

    pub fn window_secs(&self) -> f64 {
        (self.window_end.saturating_sub(self.window_start)).as_secs_f64()
    }

    pub fn in_window(&self, t: SimTime) -> bool {
        t >= self.window_start
    }
}

/// Delivered data bits per second over `duration` seconds.
pub fn compute_throughput(m: &MetricsRecord, duration: f64) -> f64 {
    assert!(duration > 0.0, "throughput needs a positive duration");
    m.data_bytes_delivered as f64 * 8.0 / duration
}

/// Mean end-to-end delay in seconds; `None` when nothing was delivered.
pub fn compute_e2ed(m: &MetricsRecord) -> Option<f64> {
    if m.deliveries.is_empty() {
        return None;
    }
    let total: u128 = m.deliveries.iter().map(|d| (d.received.0 - d.sent.0) as u128).sum();
    Some(total as f64 / m.deliveries.len() as f64 / 1e9)
}

/// Control transmissions per delivered data packet; `None` when nothing was delivered.
pub fn compute_nrl(m: &MetricsRecord) -> Option<f64> {
    if m.data_delivered == 0 {
        return None;
    }
    Some(m.control.total() as f64 / m.data_delivered as f64)
}
