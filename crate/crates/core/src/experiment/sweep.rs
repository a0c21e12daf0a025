use std::cmp::Ordering;
use std::fs::{self, File};
use std::io::BufWriter;
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use crate::analytics::{build_schedule, total_search_cost, Protocol, Variant};
use crate::par::{self, Execution};
use crate::sim::{compute_e2ed, compute_nrl, compute_throughput, write_trace, MetricsRecord, Simulator};
use crate::topology::{connectivity_profile, NodeId};

/// One (protocol, variant, pause, seed) combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub protocol: Protocol,
    pub variant: Variant,
    pub pause_time: f64,
    pub seed: u64,
}

impl Cell {
    fn cmp_key(&self, other: &Self) -> Ordering {
        (self.protocol, self.variant)
            .cmp(&(other.protocol, other.variant))
            .then(self.pause_time.total_cmp(&other.pause_time))
            .then(self.seed.cmp(&other.seed))
    }

    fn label(&self) -> String {
        format!("{}_{}_p{}_s{}", self.protocol, self.variant, self.pause_time, self.seed)
    }
}

/// Outcome of one cell. Metrics that are undefined for the run (or missing
/// because the cell failed) are `None` and serialize as empty CSV fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub protocol: Protocol,
    pub variant: Variant,
    pub pause_time: f64,
    pub seed: u64,
    /// Delivered bits per second over the measurement window.
    pub throughput: Option<f64>,
    /// Mean end-to-end delay, seconds.
    pub e2ed: Option<f64>,
    pub nrl: Option<f64>,
    pub data_sent: Option<u64>,
    pub data_delivered: Option<u64>,
    pub discovery_successes: Option<u64>,
    /// Model cost of one full ring schedule, averaged over traffic sources
    /// on the starting topology.
    pub analytic_bm: Option<f64>,
    pub simulated_rreq: Option<u64>,
    pub error: Option<String>,
}

impl ResultRow {
    pub fn cell(&self) -> Cell {
        Cell { protocol: self.protocol, variant: self.variant, pause_time: self.pause_time, seed: self.seed }
    }

    pub fn is_error(&self) -> bool {
        self.error.is_some()
    }

    pub fn failed(cell: Cell, error: String) -> Self {
        ResultRow {
            protocol: cell.protocol,
            variant: cell.variant,
            pause_time: cell.pause_time,
            seed: cell.seed,
            throughput: None,
            e2ed: None,
            nrl: None,
            data_sent: None,
            data_delivered: None,
            discovery_successes: None,
            analytic_bm: None,
            simulated_rreq: None,
            error: Some(error),
        }
    }

    pub fn from_metrics(cell: Cell, m: &MetricsRecord, analytic_bm: Option<f64>) -> Self {
        let window = m.window_secs();
        ResultRow {
            protocol: cell.protocol,
            variant: cell.variant,
            pause_time: cell.pause_time,
            seed: cell.seed,
            throughput: (window > 0.0).then(|| compute_throughput(m, window)),
            e2ed: compute_e2ed(m),
            nrl: compute_nrl(m),
            data_sent: Some(m.data_sent),
            data_delivered: Some(m.data_delivered),
            discovery_successes: Some(m.discovery_successes),
            analytic_bm,
            simulated_rreq: Some(m.control.rreq),
            error: None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    pub execution: Execution,
    /// Write one trace file per cell here.
    pub trace_dir: Option<PathBuf>,
}

/// Every cell of the sweep, in output order.
pub fn cells(config: &ScenarioConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for &protocol in &config.protocols {
        for &variant in &config.variants {
            for &pause_time in &config.pause_times {
                for &seed in &config.seeds {
                    out.push(Cell { protocol, variant, pause_time, seed });
                }
            }
        }
    }
    out.sort_by(Cell::cmp_key);
    out
}

pub fn run_sweep(config: &ScenarioConfig, options: &SweepOptions) -> Vec<ResultRow> {
    run_cells(cells(config), options.execution, |cell| run_cell(config, cell, options.trace_dir.as_ref()))
}

/// Run `f` on every cell. A cell that errors or panics yields an error row
/// and the rest carry on. Rows come back sorted by cell.
pub fn run_cells<F>(cells: Vec<Cell>, execution: Execution, f: F) -> Vec<ResultRow>
where
    F: Fn(Cell) -> Result<ResultRow, String> + Send + Sync,
{
    let mut rows = par::map(cells, execution, |cell| match panic::catch_unwind(AssertUnwindSafe(|| f(cell))) {
        Ok(Ok(row)) => row,
        Ok(Err(e)) => ResultRow::failed(cell, e),
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "cell panicked".to_string());
            ResultRow::failed(cell, format!("panic: {msg}"))
        }
    });
    rows.sort_by(|a, b| a.cell().cmp_key(&b.cell()));
    rows
}

pub fn run_cell(config: &ScenarioConfig, cell: Cell, trace_dir: Option<&PathBuf>) -> Result<ResultRow, String> {
    let mut sim_cfg = config.sim_config(cell.protocol, cell.variant, cell.pause_time);
    sim_cfg.trace = trace_dir.is_some();
    let sim = Simulator::new(sim_cfg, cell.seed).map_err(|e| e.to_string())?;
    let bm = model_cost(&sim);
    let out = sim.run();
    if let Some(dir) = trace_dir {
        fs::create_dir_all(dir).map_err(|e| e.to_string())?;
        let path = dir.join(format!("{}.tr", cell.label()));
        let file = File::create(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        write_trace(&out.trace, BufWriter::new(file)).map_err(|e| e.to_string())?;
    }
    Ok(ResultRow::from_metrics(cell, &out.metrics, bm))
}

/// Mean of the schedule cost over the distinct traffic sources, each
/// evaluated on its own measured profile of the starting topology.
fn model_cost(sim: &Simulator) -> Option<f64> {
    let cfg = sim.config();
    let schedule = build_schedule(cfg.protocol, cfg.variant, &cfg.params).ok()?;
    let mut sources: Vec<NodeId> = sim.flows().iter().map(|f| f.src).collect();
    sources.sort();
    sources.dedup();
    if sources.is_empty() {
        return None;
    }
    let mut total = 0.0;
    for &src in &sources {
        let profile = connectivity_profile(sim.graph(), src, cfg.p_s).ok()?.padded(schedule.max_ttl());
        total += total_search_cost(&schedule, &profile).ok()?;
    }
    Some(total / sources.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ScenarioConfig {
        ScenarioConfig {
            nodes: 15,
            duration: 20.0,
            warmup: 2.0,
            flows: 3,
            seeds: vec![1, 2],
            pause_times: vec![0.0, 10.0],
            ..Default::default()
        }
    }

    #[test]
    fn full_grid_has_ninety_cells() {
        assert_eq!(cells(&ScenarioConfig::default()).len(), 90);
    }

    #[test]
    fn cells_are_sorted() {
        let mut cfg = tiny();
        cfg.seeds = vec![9, 1];
        cfg.pause_times = vec![100.0, 0.0];
        let c = cells(&cfg);
        assert_eq!(c[0].pause_time, 0.0);
        assert_eq!(c[0].seed, 1);
        assert_eq!(c[0].protocol, Protocol::Aodv);
    }

    #[test]
    fn failing_cell_is_isolated() {
        let all = cells(&ScenarioConfig::default());
        let bad = all[17];
        let rows = run_cells(all, Execution::Parallel(2), |cell| {
            if cell == bad {
                panic!("boom");
            }
            Ok(ResultRow::failed(cell, String::new())).map(|mut r| {
                r.error = None;
                r.throughput = Some(1.0);
                r
            })
        });
        assert_eq!(rows.len(), 90);
        assert_eq!(rows.iter().filter(|r| r.is_error()).count(), 1);
        assert!(rows[17].error.as_deref().unwrap().contains("boom"));
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let cfg = ScenarioConfig { protocols: vec![Protocol::Aodv], variants: vec![Variant::Ers2], ..tiny() };
        let seq = run_sweep(&cfg, &SweepOptions { execution: Execution::Sequential, trace_dir: None });
        let par = run_sweep(&cfg, &SweepOptions { execution: Execution::Parallel(3), trace_dir: None });
        assert_eq!(seq, par);
        assert_eq!(seq.len(), 4);
        assert!(seq.iter().all(|r| !r.is_error() && r.analytic_bm.is_some()));
    }
}
