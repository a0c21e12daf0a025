use std::fmt;
use std::io::{Read, Write};

use thiserror::Error;

use super::sweep::ResultRow;
use crate::analytics::{Protocol, Variant};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no result rows to report")]
    Empty,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ResultRow>, ReportError> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

/// Mean and sample standard deviation over the defined values of a metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: Option<f64>,
    /// `None` below two samples.
    pub sd: Option<f64>,
    pub used: usize,
    /// Cells where the metric was undefined.
    pub excluded: usize,
}

impl Stat {
    pub fn of(values: impl IntoIterator<Item = Option<f64>>) -> Self {
        let mut xs = Vec::new();
        let mut excluded = 0;
        for v in values {
            match v {
                Some(x) => xs.push(x),
                None => excluded += 1,
            }
        }
        let n = xs.len();
        let mean = (n > 0).then(|| xs.iter().sum::<f64>() / n as f64);
        let sd = mean.filter(|_| n > 1).map(|m| {
            let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
            (ss / (n - 1) as f64).sqrt()
        });
        Stat { mean, sd, used: n, excluded }
    }
}

impl fmt::Display for Stat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.mean, self.sd) {
            (Some(m), Some(s)) => write!(f, "{m:.4} ± {s:.4}")?,
            (Some(m), None) => write!(f, "{m:.4}")?,
            _ => write!(f, "n/a")?,
        }
        if self.excluded > 0 {
            write!(f, " ({} excl)", self.excluded)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub protocol: Protocol,
    pub variant: Variant,
    pub pause_time: f64,
    pub cells: usize,
    pub errors: usize,
    pub throughput: Stat,
    pub e2ed: Stat,
    pub nrl: Stat,
}

/// ERS2 mean minus ERS1 mean for one protocol and pause time. A negative NRL
/// or E2ED delta, or a positive throughput delta, favors ERS2.
#[derive(Debug, Clone, PartialEq)]
pub struct Delta {
    pub protocol: Protocol,
    pub pause_time: f64,
    pub throughput: Option<f64>,
    pub e2ed: Option<f64>,
    pub nrl: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub groups: Vec<GroupSummary>,
    pub deltas: Vec<Delta>,
}

pub fn summarize(rows: &[ResultRow]) -> Result<Summary, ReportError> {
    if rows.is_empty() {
        return Err(ReportError::Empty);
    }
    let mut sorted: Vec<&ResultRow> = rows.iter().collect();
    sorted.sort_by(|a, b| {
        (a.protocol, a.variant).cmp(&(b.protocol, b.variant)).then(a.pause_time.total_cmp(&b.pause_time))
    });
    let mut groups: Vec<GroupSummary> = Vec::new();
    for chunk in sorted.chunk_by(|a, b| (a.protocol, a.variant, a.pause_time) == (b.protocol, b.variant, b.pause_time))
    {
        let ok: Vec<&&ResultRow> = chunk.iter().filter(|r| !r.is_error()).collect();
        groups.push(GroupSummary {
            protocol: chunk[0].protocol,
            variant: chunk[0].variant,
            pause_time: chunk[0].pause_time,
            cells: chunk.len(),
            errors: chunk.len() - ok.len(),
            throughput: Stat::of(ok.iter().map(|r| r.throughput)),
            e2ed: Stat::of(ok.iter().map(|r| r.e2ed)),
            nrl: Stat::of(ok.iter().map(|r| r.nrl)),
        });
    }

    let mut deltas = Vec::new();
    for g1 in groups.iter().filter(|g| g.variant == Variant::Ers1) {
        let Some(g2) = groups
            .iter()
            .find(|g| g.variant == Variant::Ers2 && g.protocol == g1.protocol && g.pause_time == g1.pause_time)
        else {
            continue;
        };
        let d = |a: &Stat, b: &Stat| Some(b.mean? - a.mean?);
        deltas.push(Delta {
            protocol: g1.protocol,
            pause_time: g1.pause_time,
            throughput: d(&g1.throughput, &g2.throughput),
            e2ed: d(&g1.e2ed, &g2.e2ed),
            nrl: d(&g1.nrl, &g2.nrl),
        });
    }
    Ok(Summary { groups, deltas })
}

/// Write the CSV and return the grouped summary.
pub fn emit_report<W: Write>(rows: &[ResultRow], csv_out: W) -> Result<Summary, ReportError> {
    let summary = summarize(rows)?;
    write_csv(rows, csv_out)?;
    Ok(summary)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:+.4}"))
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<5} {:<5} {:>6} {:>5}  {:<28} {:<24} {:<24}",
            "proto", "var", "pause", "cells", "throughput (bit/s)", "e2ed (s)", "nrl"
        )?;
        for g in &self.groups {
            let cells = if g.errors > 0 { format!("{}!{}", g.cells, g.errors) } else { g.cells.to_string() };
            writeln!(
                f,
                "{:<5} {:<5} {:>6} {:>5}  {:<28} {:<24} {:<24}",
                g.protocol.to_string(),
                g.variant.to_string(),
                g.pause_time,
                cells,
                g.throughput.to_string(),
                g.e2ed.to_string(),
                g.nrl.to_string()
            )?;
        }
        if !self.deltas.is_empty() {
            writeln!(f)?;
            writeln!(f, "ERS2 - ERS1 (negative e2ed/nrl, positive throughput favor ERS2)")?;
            writeln!(f, "{:<5} {:>6}  {:>14} {:>10} {:>10}", "proto", "pause", "throughput", "e2ed", "nrl")?;
            for d in &self.deltas {
                writeln!(
                    f,
                    "{:<5} {:>6}  {:>14} {:>10} {:>10}",
                    d.protocol.to_string(),
                    d.pause_time,
                    opt(d.throughput),
                    opt(d.e2ed),
                    opt(d.nrl)
                )?;
            }
        }
        Ok(())
    }
}
