//! Scenario configuration, seed sweeps and reporting.

pub mod compare;
pub mod config;
pub mod report;
pub mod sweep;

pub use compare::{analytic_compare, probe_discovery, CompareRow, CompareTable, DiscoveryProbe, RingObservation};
pub use config::{parse_config, parse_config_str, ScenarioConfig};
pub use report::{emit_report, read_csv, summarize, write_csv, ReportError, Summary};
pub use sweep::{cells, run_cell, run_cells, run_sweep, Cell, ResultRow, SweepOptions};
