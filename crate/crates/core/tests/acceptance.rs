//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::collections::VecDeque;
use std::io::Write;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ers_core::analytics::{
    blind_flood_cost, build_schedule, discovery_schedule, dsr_expected_wait, expected_locating_time, ring_cost_ttl,
    ConnectivityProfile, ErsParams, LocationDistribution, Protocol, Variant,
};
use ers_core::experiment::{probe_discovery, run_sweep, write_csv, ResultRow, ScenarioConfig, SweepOptions};
use ers_core::par::Execution;
use ers_core::topology::{generate_connected_topology, Arena, Graph, NodeId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, started: Instant) -> Result<Duration, String> {
    let took = started.elapsed();
    ensure(took < limit, || format!("took {took:.2?}, limit {limit:?}"))?;
    Ok(took)
}

// ---------------------------------------------------------------- 1

/// Straight-line evaluation of the flooding sum, kept separate from the library.
fn flood_oracle(p_s: f64, d_avg: f64, d_f: &[f64], k: u32) -> f64 {
    let first = p_s * d_avg;
    if k == 1 {
        return first;
    }
    let mut sum = 0.0;
    let mut product = 1.0;
    for i in 1..k as usize {
        product *= d_f[i - 1];
        sum += p_s.powi(i as i32 + 1) * product;
    }
    first + d_avg * sum
}

fn formula_exactness() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_250_101);
    for case in 0..1000 {
        let ttl = rng.gen_range(1..=10u32);
        let p_s = if case % 10 == 0 { 1.0 } else { rng.gen::<f64>() };
        let d_avg = rng.gen_range(0.0..12.0);
        let d_f: Vec<f64> = (0..ttl - 1).map(|_| rng.gen_range(0.0..8.0)).collect();
        let profile = ConnectivityProfile::new(p_s, d_avg, d_f.clone()).map_err(|e| e.to_string())?;
        let ring = ring_cost_ttl(&profile, ttl).map_err(|e| e.to_string())?;
        let flood = blind_flood_cost(&profile, ttl).map_err(|e| e.to_string())?;
        let oracle = flood_oracle(p_s, d_avg, &d_f, ttl);
        ensure(ring.to_bits() == flood.to_bits() && flood.to_bits() == oracle.to_bits(), || {
            format!("case {case}: ring {ring:e} flood {flood:e} oracle {oracle:e}")
        })?;
    }
    for tau_ms in [30u64, 90] {
        let tau = Duration::from_millis(tau_ms);
        for m in 0..=20u32 {
            let want = Duration::from_millis(tau_ms * ((1u64 << m) - 1));
            let got = dsr_expected_wait(m, tau);
            ensure(got == want, || format!("dsr wait m={m} tau={tau_ms}ms: {got:?} != {want:?}"))?;
        }
    }
    let one = LocationDistribution::new(vec![1.0]).map_err(|e| e.to_string())?;
    let e1 = expected_locating_time(0.1, &one).map_err(|e| e.to_string())?;
    ensure(e1 == 0.05, || format!("L=1, P=[1], T=100ms gave {e1}"))?;
    for l in 1..=8usize {
        let t = 0.1;
        let zero = LocationDistribution::new(vec![0.0; l]).map_err(|e| e.to_string())?;
        let got = expected_locating_time(t, &zero).map_err(|e| e.to_string())?;
        let want = l as f64 * t + 0.5 * t;
        ensure(got == want, || format!("all-zero L={l}: {got} != {want}"))?;
        ensure((got - (l as f64 + 0.5) * t).abs() < 1e-15, || format!("all-zero L={l}: {got}"))?;
    }
    let took = within(Duration::from_secs(1), started)?;
    Ok(format!("1000 ring/flood tuples bit-identical, DSR waits m<=20 exact, closed cases exact ({took:.2?})"))
}

// ---------------------------------------------------------------- 2

fn schedule_fidelity() -> Outcome {
    let want: [(Protocol, Variant, &[u32]); 6] = [
        (Protocol::Aodv, Variant::Ers1, &[2, 4, 6, 35, 35, 35]),
        (Protocol::Aodv, Variant::Ers2, &[3, 6, 9, 35, 35, 35]),
        (Protocol::Dsr, Variant::Ers1, &[1, 255]),
        (Protocol::Dsr, Variant::Ers2, &[3, 255]),
        (Protocol::Dymo, Variant::Ers1, &[2, 4, 6, 10, 20]),
        (Protocol::Dymo, Variant::Ers2, &[3, 6, 9, 20, 35, 75]),
    ];
    for (p, v, rings) in want {
        let s = build_schedule(p, v, &ErsParams::preset(p, v)).map_err(|e| e.to_string())?;
        ensure(s.rings() == rings, || format!("{p}-{v}: {:?} != {rings:?}", s.rings()))?;
    }
    Ok("six schedules match".into())
}

// ---------------------------------------------------------------- 3 and 4

/// Census by plain BFS: nodes strictly closer than `ttl` hops, plus the source.
fn census_oracle(g: &Graph, source: NodeId, ttl: u32) -> u64 {
    let mut dist = vec![u32::MAX; g.len()];
    dist[source.index()] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        for &v in g.neighbors(u) {
            if dist[v.index()] == u32::MAX {
                dist[v.index()] = dist[u.index()] + 1;
                queue.push_back(v);
            }
        }
    }
    dist.iter().filter(|&&d| d < ttl).count() as u64
}

/// Ring waits from first principles.
fn wait_oracle(p: Protocol, v: Variant, ring: usize, ttl: u32) -> Duration {
    match p {
        Protocol::Dsr => {
            let tau = if v == Variant::Ers1 { 30 } else { 90 };
            Duration::from_millis(tau << ring)
        }
        _ => {
            let ntt = if v == Variant::Ers1 { 40 } else { 25 };
            let cap = match (p, v) {
                (Protocol::Aodv, Variant::Ers1) => 5600,
                (Protocol::Dymo, Variant::Ers1) => 1920,
                _ => 1100,
            };
            Duration::from_millis((2 * ntt * (ttl as u64 + 2)).min(cap))
        }
    }
}

fn frozen_topologies() -> Vec<Graph> {
    (1..=20u64).map(|s| generate_connected_topology(s * 7919, 50, &Arena::default()).1).collect()
}

const CELLS: [(Protocol, Variant); 6] = [
    (Protocol::Aodv, Variant::Ers1),
    (Protocol::Aodv, Variant::Ers2),
    (Protocol::Dsr, Variant::Ers1),
    (Protocol::Dsr, Variant::Ers2),
    (Protocol::Dymo, Variant::Ers1),
    (Protocol::Dymo, Variant::Ers2),
];

fn cross_check() -> Outcome {
    let started = Instant::now();
    let mut rings_checked = 0;
    for (t, g) in frozen_topologies().iter().enumerate() {
        if !g.is_connected() {
            return Err(format!("topology {t} is not connected"));
        }
        for (p, v) in CELLS {
            let probe = probe_discovery(p, v, g, NodeId(0), NodeId(50), 1.0).map_err(|e| e.to_string())?;
            let walk = discovery_schedule(p, v, &ErsParams::preset(p, v)).map_err(|e| e.to_string())?;
            let ttls: Vec<u32> = probe.rings.iter().map(|r| r.ttl).collect();
            ensure(ttls == walk.rings(), || format!("topology {t} {p}-{v}: rings {ttls:?} != {:?}", walk.rings()))?;
            for (i, r) in probe.rings.iter().enumerate() {
                let want = census_oracle(g, NodeId(0), r.ttl);
                ensure(r.transmissions == want, || {
                    format!(
                        "topology {t} {p}-{v} ring {} (ttl {}): {} RREQs, census {want}",
                        i + 1,
                        r.ttl,
                        r.transmissions
                    )
                })?;
                rings_checked += 1;
            }
        }
    }
    let took = within(Duration::from_secs(30), started)?;
    Ok(format!("{rings_checked} rings on 20 topologies match the census exactly ({took:.2?})"))
}

fn wait_check() -> Outcome {
    let tick = Duration::from_micros(1);
    let mut gaps = 0;
    for (t, g) in frozen_topologies().iter().enumerate().take(5) {
        for (p, v) in CELLS {
            let probe = probe_discovery(p, v, g, NodeId(0), NodeId(50), 1.0).map_err(|e| e.to_string())?;
            let waits = probe.observed_waits();
            ensure(waits.len() == probe.rings.len(), || format!("topology {t} {p}-{v}: discovery did not give up"))?;
            for (i, (w, r)) in waits.iter().zip(&probe.rings).enumerate() {
                let want = wait_oracle(p, v, i, r.ttl);
                let diff = (*w).abs_diff(want);
                ensure(diff <= tick, || {
                    format!("topology {t} {p}-{v} ring {}: waited {w:?}, expected {want:?}", i + 1)
                })?;
                gaps += 1;
            }
        }
    }
    Ok(format!("{gaps} ring waits within 1 us of the expected values"))
}

// ---------------------------------------------------------------- 5

fn paired_wins(
    rows: &[ResultRow],
    protocol: Protocol,
    pause: f64,
    better: impl Fn(&ResultRow, &ResultRow) -> Option<bool>,
) -> (usize, usize) {
    let mut wins = 0;
    let mut seeds = 0;
    for r1 in rows.iter().filter(|r| r.protocol == protocol && r.variant == Variant::Ers1 && r.pause_time == pause) {
        let Some(r2) = rows.iter().find(|r| {
            r.protocol == protocol && r.variant == Variant::Ers2 && r.pause_time == pause && r.seed == r1.seed
        }) else {
            continue;
        };
        seeds += 1;
        if better(r1, r2) == Some(true) {
            wins += 1;
        }
    }
    (wins, seeds)
}

fn directional() -> Outcome {
    let started = Instant::now();
    let cfg = ScenarioConfig { duration: 300.0, seeds: (1..=10).collect(), ..Default::default() };
    let rows = run_sweep(&cfg, &SweepOptions { execution: Execution::Parallel(0), trace_dir: None });
    if let Some(bad) = rows.iter().find(|r| r.is_error()) {
        return Err(format!("cell failed: {:?}", bad.error));
    }
    let nrl = |a: &ResultRow, b: &ResultRow| Some(b.nrl? < a.nrl?);
    let thr = |a: &ResultRow, b: &ResultRow| Some(b.throughput? > a.throughput?);
    let e2ed = |a: &ResultRow, b: &ResultRow| Some(b.e2ed? < a.e2ed?);
    let mut detail = Vec::new();
    let mut ok = true;
    for pause in [0.0, 100.0, 200.0] {
        let a = paired_wins(&rows, Protocol::Aodv, pause, nrl);
        let b = paired_wins(&rows, Protocol::Dymo, pause, thr);
        let c = paired_wins(&rows, Protocol::Dsr, pause, e2ed);
        if pause == 0.0 {
            ok = a.0 >= 7 && b.0 >= 7 && c.0 >= 7;
            detail.push(format!(
                "pause 0: (a) AODV NRL {}/{} (b) DYMO throughput {}/{} (c) DSR E2ED {}/{}",
                a.0, a.1, b.0, b.1, c.0, c.1
            ));
        } else {
            detail.push(format!("pause {pause}: {}/{} {}/{} {}/{}", a.0, a.1, b.0, b.1, c.0, c.1));
        }
    }
    let took = started.elapsed();
    let msg = format!("{}; {took:.1?}", detail.join("; "));
    if took >= Duration::from_secs(600) {
        return Err(format!("{msg}; over the 10 min budget"));
    }
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

// ---------------------------------------------------------------- 6

fn csv_bytes(cfg: &ScenarioConfig, execution: Execution) -> Result<Vec<u8>, String> {
    let rows = run_sweep(cfg, &SweepOptions { execution, trace_dir: None });
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).map_err(|e| e.to_string())?;
    Ok(buf)
}

fn determinism() -> Outcome {
    let cfg = ScenarioConfig {
        duration: 60.0,
        warmup: 10.0,
        seeds: vec![11, 12],
        pause_times: vec![0.0, 100.0],
        ..Default::default()
    };
    let a = csv_bytes(&cfg, Execution::Sequential)?;
    let b = csv_bytes(&cfg, Execution::Sequential)?;
    let c = csv_bytes(&cfg, Execution::Parallel(4))?;
    ensure(a == b, || "repeat sweep produced different CSV bytes".into())?;
    ensure(a == c, || "parallel sweep produced different CSV bytes".into())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    std::fs::write(dir.path().join("a.csv"), &a).map_err(|e| e.to_string())?;
    let back = std::fs::read(dir.path().join("a.csv")).map_err(|e| e.to_string())?;
    ensure(back == a, || "CSV changed on disk".into())?;
    Ok(format!("24-cell sweep: {} CSV bytes identical across 3 runs", a.len()))
}

// ---------------------------------------------------------------- 7

fn properties() -> Outcome {
    let (mut clean, mut dup, mut cons, mut cache, mut ttl, mut load) = (0, 0, 0, 0, 0, 0);
    for case in 0..100 {
        let (cfg, seed) = common::random_scenario(case);
        let v = common::check_run(cfg, seed);
        dup += (v.duplicate_rebroadcasts > 0) as usize;
        cons += v.conservation.is_some() as usize;
        cache += (v.cache_overflows > 0) as usize;
        ttl += (v.ttl_breaches > 0) as usize;
        load += v.control_recount.is_some() as usize;
        clean += v.is_clean() as usize;
    }
    let msg = format!(
        "{clean}/100 runs clean; violating runs: duplicate rebroadcast {dup}, conservation {cons}, \
         cache bound {cache}, TTL bound {ttl}, control recount {load}"
    );
    if clean == 100 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("formula exactness", formula_exactness),
        ("schedule fidelity", schedule_fidelity),
        ("analytic/simulation cross-check", cross_check),
        ("ring wait timing", wait_check),
        ("directional reproduction", directional),
        ("determinism", determinism),
        ("property suites", properties),
    ];
    let mut out = std::io::stdout().lock();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let line = match &result {
            Ok(detail) => format!("PASS [{}] {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                format!("FAIL [{}] {name}: {detail}", i + 1)
            }
        };
        let _ = writeln!(out, "{line}");
        let _ = out.flush();
    }
    let _ = writeln!(out, "acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
