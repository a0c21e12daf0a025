//! Expanding ring search for MANET route discovery: closed-form cost and
//! latency models, a deterministic discrete-event simulator for AODV, DSR
//! and DYMO, and a seed sweep harness.

pub mod analytics;
pub mod experiment;
pub mod mobility;
pub mod packet;
pub mod par;
pub mod protocol;
pub mod sim;
pub mod topology;
