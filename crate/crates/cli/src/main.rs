use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use ers_core::analytics::{build_schedule, discovery_schedule, ErsParams, Protocol, Variant};
use ers_core::experiment::{analytic_compare, emit_report, parse_config, run_sweep, SweepOptions};
use ers_core::par::Execution;

#[derive(Parser)]
#[command(name = "ers", version, about = "Expanding ring search: sweeps, model checks and schedules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every protocol/variant/pause/seed cell of a scenario and write results.csv and summary.txt.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to `out_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a packet trace per cell under <out>/traces.
        #[arg(long)]
        trace: bool,
        /// Worker threads (1 runs sequentially, 0 uses every core).
        #[arg(long, default_value_t = 1)]
        parallel: usize,
    },
    /// Compare ring census, model cost and waits with static simulations.
    Compare {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the TTL schedule and per-ring waits of one protocol variant.
    Schedule {
        #[arg(long)]
        protocol: Protocol,
        #[arg(long)]
        variant: Variant,
    },
}

fn run(config: PathBuf, out: Option<PathBuf>, trace: bool, parallel: usize) -> Result<()> {
    let cfg = parse_config(&config).with_context(|| format!("loading {}", config.display()))?;
    let out = out.unwrap_or_else(|| cfg.out_dir.clone());
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let options =
        SweepOptions { execution: Execution::from_threads(parallel), trace_dir: trace.then(|| out.join("traces")) };
    let rows = run_sweep(&cfg, &options);

    let csv_path = out.join("results.csv");
    let file = File::create(&csv_path).with_context(|| format!("creating {}", csv_path.display()))?;
    let summary = emit_report(&rows, BufWriter::new(file))?;
    let text = summary.to_string();
    fs::write(out.join("summary.txt"), &text)?;
    print!("{text}");

    let failed: Vec<_> = rows.iter().filter(|r| r.is_error()).collect();
    for r in &failed {
        eprintln!(
            "cell {} {} pause {} seed {} failed: {}",
            r.protocol,
            r.variant,
            r.pause_time,
            r.seed,
            r.error.as_deref().unwrap_or("")
        );
    }
    eprintln!("{} cells, {} failed; results in {}", rows.len(), failed.len(), out.display());
    Ok(())
}

fn compare(config: PathBuf) -> Result<()> {
    let cfg = parse_config(&config).with_context(|| format!("loading {}", config.display()))?;
    let table = analytic_compare(&cfg)?;
    print!("{table}");
    Ok(())
}

fn schedule(protocol: Protocol, variant: Variant) -> Result<()> {
    let params = ErsParams::preset(protocol, variant);
    let rings = build_schedule(protocol, variant, &params)?;
    let walk = discovery_schedule(protocol, variant, &params)?;
    println!("{protocol}-{variant} rings: {rings}");
    println!("{:>4} {:>5} {:>12} {:>12}", "ring", "ttl", "wait (ms)", "elapsed (ms)");
    let mut elapsed = 0.0;
    for (i, (ttl, wait)) in walk.rings().iter().zip(walk.waits(&params)).enumerate() {
        let w = wait.as_secs_f64() * 1e3;
        elapsed += w;
        println!("{:>4} {:>5} {:>12.3} {:>12.3}", i + 1, ttl, w, elapsed);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, trace, parallel } => run(config, out, trace, parallel),
        Command::Compare { config } => compare(config),
        Command::Schedule { protocol, variant } => schedule(protocol, variant),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
