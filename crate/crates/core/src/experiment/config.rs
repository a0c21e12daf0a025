//! Scenario files.
//!
//! The format is one `key = value` pair per line. Values are numbers, bare
//! words, or bracketed comma-separated lists such as `[0, 100, 200]`. Blank
//! lines and anything after `#` are ignored. Unknown or repeated keys are
//! errors, and omitted keys keep their defaults, so an empty file is a valid
//! scenario.
//!
//! | key | default |
//! |---|---|
//! | `nodes` | 50 |
//! | `width`, `height` | 1000 |
//! | `radio_range` | 250 |
//! | `v_max` | 30 |
//! | `pause_times` | `[0, 100, 200]` |
//! | `duration` | 900 |
//! | `warmup` | 50 |
//! | `flows` | 10 |
//! | `rate` | 4 |
//! | `packet_size` | 512 |
//! | `protocols` | `[AODV, DSR, DYMO]` |
//! | `variants` | `[ERS1, ERS2]` |
//! | `seeds` | `[1, 2, 3, 4, 5]` |
//! | `p_s` | 1 |
//! | `out_dir` | `results` |

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::analytics::{Protocol, Variant};
use crate::sim::SimConfig;
use crate::topology::Arena;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub nodes: usize,
    pub arena: Arena,
    pub v_max: f64,
    pub pause_times: Vec<f64>,
    pub duration: f64,
    pub warmup: f64,
    pub flows: usize,
    pub rate: f64,
    pub packet_size: u32,
    pub protocols: Vec<Protocol>,
    pub variants: Vec<Variant>,
    pub seeds: Vec<u64>,
    pub p_s: f64,
    pub out_dir: PathBuf,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            nodes: 50,
            arena: Arena::default(),
            v_max: 30.0,
            pause_times: vec![0.0, 100.0, 200.0],
            duration: 900.0,
            warmup: 50.0,
            flows: 10,
            rate: 4.0,
            packet_size: 512,
            protocols: Protocol::ALL.to_vec(),
            variants: vec![Variant::Ers1, Variant::Ers2],
            seeds: (1..=5).collect(),
            p_s: 1.0,
            out_dir: PathBuf::from("results"),
        }
    }
}

const KEYS: &[&str] = &[
    "nodes",
    "width",
    "height",
    "radio_range",
    "v_max",
    "pause_times",
    "duration",
    "warmup",
    "flows",
    "rate",
    "packet_size",
    "protocols",
    "variants",
    "seeds",
    "p_s",
    "out_dir",
];

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |field, reason: &str| Err(ConfigError::Invalid { field, reason: reason.to_string() });
        if self.nodes < 1 {
            return bad("nodes", "must be at least 1");
        }
        if self.pause_times.is_empty() {
            return bad("pause_times", "list is empty");
        }
        if self.pause_times.iter().any(|p| p.is_nan() || *p < 0.0) {
            return bad("pause_times", "entries must be non-negative");
        }
        if self.protocols.is_empty() {
            return bad("protocols", "list is empty");
        }
        if self.variants.is_empty() {
            return bad("variants", "list is empty");
        }
        if self.seeds.is_empty() {
            return bad("seeds", "list is empty");
        }
        if self.flows < 1 {
            return bad("flows", "must be at least 1");
        }
        if self.duration <= self.warmup {
            return bad("duration", "must exceed warmup");
        }
        // the remaining per-run checks live with the simulator
        self.sim_config(self.protocols[0], self.variants[0], self.pause_times[0])
            .validate()
            .map_err(|crate::sim::ConfigError::Invalid { field, reason }| ConfigError::Invalid { field, reason })
    }

    /// Simulator settings for one cell of the sweep.
    pub fn sim_config(&self, protocol: Protocol, variant: Variant, pause_time: f64) -> SimConfig {
        let mut cfg = SimConfig::new(protocol, variant);
        cfg.nodes = self.nodes;
        cfg.arena = self.arena;
        cfg.v_max = self.v_max;
        cfg.pause_time = pause_time;
        cfg.duration = self.duration;
        cfg.warmup = self.warmup;
        cfg.flows = self.flows;
        cfg.rate = self.rate;
        cfg.packet_size = self.packet_size;
        cfg.p_s = self.p_s;
        cfg
    }
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<ScenarioConfig, ConfigError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut cfg = ScenarioConfig::default();
    let mut seen = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let perr = |message: String| ConfigError::Parse { line, message };
        let (key, value) =
            content.split_once('=').ok_or_else(|| perr(format!("expected `key = value`, got `{content}`")))?;
        let key = key.trim();
        let value = value.trim();
        if !KEYS.contains(&key) {
            return Err(perr(format!("unknown key `{key}`")));
        }
        if !seen.insert(key.to_string()) {
            return Err(perr(format!("duplicate key `{key}`")));
        }
        match key {
            "nodes" => cfg.nodes = scalar(value).map_err(perr)?,
            "width" => cfg.arena.width = scalar(value).map_err(perr)?,
            "height" => cfg.arena.height = scalar(value).map_err(perr)?,
            "radio_range" => cfg.arena.radio_range = scalar(value).map_err(perr)?,
            "v_max" => cfg.v_max = scalar(value).map_err(perr)?,
            "pause_times" => cfg.pause_times = list(value).map_err(perr)?,
            "duration" => cfg.duration = scalar(value).map_err(perr)?,
            "warmup" => cfg.warmup = scalar(value).map_err(perr)?,
            "flows" => cfg.flows = scalar(value).map_err(perr)?,
            "rate" => cfg.rate = scalar(value).map_err(perr)?,
            "packet_size" => cfg.packet_size = scalar(value).map_err(perr)?,
            "protocols" => cfg.protocols = dedup(list(value).map_err(perr)?),
            "variants" => cfg.variants = dedup(list(value).map_err(perr)?),
            "seeds" => cfg.seeds = dedup(list(value).map_err(perr)?),
            "p_s" => cfg.p_s = scalar(value).map_err(perr)?,
            "out_dir" => cfg.out_dir = PathBuf::from(unquote(value)),
            _ => unreachable!("key list and match arms agree"),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn unquote(s: &str) -> &str {
    s.strip_prefix('"').and_then(|s| s.strip_suffix('"')).unwrap_or(s)
}

fn scalar<T: FromStr>(s: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    unquote(s).parse().map_err(|e| format!("bad value `{s}`: {e}"))
}

fn list<T: FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    let inner = s
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| format!("expected a list like `[a, b]`, got `{s}`"))?;
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    inner.split(',').map(|item| scalar(item.trim())).collect()
}

fn dedup<T: PartialEq>(items: Vec<T>) -> Vec<T> {
    let mut out = Vec::with_capacity(items.len());
    for x in items {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = parse_config_str("").unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
        assert_eq!(cfg.nodes, 50);
        assert_eq!((cfg.arena.width, cfg.arena.height), (1000.0, 1000.0));
        assert_eq!(cfg.v_max, 30.0);
        assert_eq!(cfg.pause_times, vec![0.0, 100.0, 200.0]);
        assert_eq!(cfg.packet_size, 512);
    }

    #[test]
    fn lists_comments_and_words() {
        let cfg = parse_config_str(
            "# quick look\npause_times = [0]\nprotocols = [DSR, aodv]\nvariants=[ERS2]\nseeds = [3, 4]  # two\nout_dir = \"out/x\"\n",
        )
        .unwrap();
        assert_eq!(cfg.pause_times, vec![0.0]);
        assert_eq!(cfg.protocols, vec![Protocol::Dsr, Protocol::Aodv]);
        assert_eq!(cfg.variants, vec![Variant::Ers2]);
        assert_eq!(cfg.seeds, vec![3, 4]);
        assert_eq!(cfg.out_dir, PathBuf::from("out/x"));
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = parse_config_str("nodes = 20\n\nspeed = 3\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 3, .. }), "{err}");
        assert!(err.to_string().contains("speed"));
    }

    #[test]
    fn malformed_lines_are_rejected() {
        assert!(matches!(parse_config_str("nodes 20").unwrap_err(), ConfigError::Parse { line: 1, .. }));
        assert!(matches!(parse_config_str("nodes = many").unwrap_err(), ConfigError::Parse { line: 1, .. }));
        assert!(matches!(parse_config_str("seeds = 1, 2").unwrap_err(), ConfigError::Parse { line: 1, .. }));
        assert!(matches!(parse_config_str("nodes = 2\nnodes = 3").unwrap_err(), ConfigError::Parse { line: 2, .. }));
    }

    #[test]
    fn duration_below_warmup_names_field() {
        let err = parse_config_str("duration = 40\nwarmup = 50\n").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { field: "duration", .. }), "{err}");
        let err = parse_config_str("p_s = 2").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { field: "p_s", .. }), "{err}");
        let err = parse_config_str("seeds = []").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { field: "seeds", .. }), "{err}");
    }
}
