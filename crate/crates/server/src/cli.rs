//! `tunnel-blimp` subcommands.

use crate::api::{router, AppState};
use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;
use tunnel_blimp::harness::{batch_report, evaluate_run, run_scenario_with, Metrics, RunHooks, ScenarioConfig};
use tunnel_blimp::runlog::RunRecord;
use tunnel_blimp::BaseStation;

#[derive(Debug, Parser)]
#[command(name = "tunnel-blimp", version, about = "Blimp-in-tunnel simulator and base station")]
pub struct Cli {
    /// Directory holding saved runs (`<run_id>.jsonl`).
    #[arg(long, global = true, default_value = "runs")]
    pub runs_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and save its log.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Serve the base-station API while the run plays out in real time.
        #[arg(long)]
        serve: bool,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Simulated seconds per second when serving.
        #[arg(long, default_value_t = 1.0)]
        speed: f64,
    },
    /// Print the metrics of a saved run.
    Metrics {
        /// Run id in the runs directory, or a path to a run log.
        #[arg(long)]
        run: String,
        /// Recompute against this scenario's map instead of using the stored values.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run every config in a directory under every seed and tabulate.
    Batch {
        /// Directory of scenario files, or a single scenario file.
        #[arg(long)]
        configs: PathBuf,
        /// Seeds as a list (`1,2,3`) or half-open range (`0..5`).
        #[arg(long, default_value = "0..5")]
        seeds: String,
        /// Output path for the text table; CSV goes next to it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Play back the frames of a saved run.
    Replay {
        #[arg(long)]
        run: String,
        #[arg(long, default_value_t = 1.0)]
        speed: f64,
        /// Serve the base-station API with the replayed frames.
        #[arg(long)]
        serve: bool,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
    /// Serve the base-station API without starting a run.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            seed,
            serve,
            addr,
            speed,
        } => {
            let mut cfg = ScenarioConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if serve {
                serve_run(cfg, &cli.runs_dir, addr, speed)
            } else {
                let record = run_scenario_with(&cfg, RunHooks::default())?;
                let path = cli.runs_dir.join(format!("{}.jsonl", record.run_id));
                record.save(&path)?;
                print_summary(&record);
                println!("saved {}", path.display());
                Ok(())
            }
        }
        Command::Metrics { run, config } => {
            let record = load_run(&cli.runs_dir, &run)?;
            let metrics = match config {
                Some(path) => evaluate_run(&ScenarioConfig::load(&path)?, &record)?,
                None => record
                    .metrics
                    .clone()
                    .context("run log has no metrics; pass --config")?,
            };
            print!("{}", format_metrics(&record.run_id, &metrics));
            Ok(())
        }
        Command::Batch { configs, seeds, out } => {
            let seeds = parse_seeds(&seeds)?;
            let configs = load_configs(&configs)?;
            let report = batch_report(&configs, &seeds)?;
            let text = report.to_text();
            print!("{text}");
            if let Some(out) = out {
                if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(dir)?;
                }
                std::fs::write(&out, &text)?;
                let csv = out.with_extension("csv");
                std::fs::write(&csv, report.to_csv())?;
                println!("wrote {} and {}", out.display(), csv.display());
            }
            Ok(())
        }
        Command::Replay {
            run,
            speed,
            serve,
            addr,
        } => {
            if !(speed > 0.0) {
                bail!("speed must be positive");
            }
            let record = load_run(&cli.runs_dir, &run)?;
            let station = Arc::new(BaseStation::default());
            let runtime = tokio::runtime::Runtime::new()?;
            if serve {
                let state = AppState::new(station.clone(), None);
                let listener = runtime.block_on(tokio::net::TcpListener::bind(addr))?;
                println!("serving on http://{addr}");
                runtime.spawn(async move { axum::serve(listener, router(state)).await });
            }
            replay(&record, &station, speed);
            if serve {
                println!("replay finished; press Ctrl-C to stop serving");
                runtime.block_on(tokio::signal::ctrl_c())?;
            }
            Ok(())
        }
        Command::Serve { addr } => {
            let state = AppState::new(Arc::new(BaseStation::default()), Some(cli.runs_dir.clone()));
            load_saved_runs(state.station(), &cli.runs_dir);
            tokio::runtime::Runtime::new()?.block_on(async move {
                let listener = tokio::net::TcpListener::bind(addr).await?;
                println!("serving on http://{addr}");
                axum::serve(listener, router(state))
                    .with_graceful_shutdown(async {
                        let _ = tokio::signal::ctrl_c().await;
                    })
                    .await?;
                Ok(())
            })
        }
    }
}

fn serve_run(cfg: ScenarioConfig, runs_dir: &Path, addr: SocketAddr, speed: f64) -> Result<()> {
    if !(speed > 0.0) {
        bail!("speed must be positive");
    }
    let state = AppState::new(Arc::new(BaseStation::default()), Some(runs_dir.to_path_buf()));
    load_saved_runs(state.station(), runs_dir);
    let runtime = tokio::runtime::Runtime::new()?;
    let listener = runtime.block_on(tokio::net::TcpListener::bind(addr))?;
    println!("serving on http://{addr}");
    let app = router(state.clone());
    runtime.spawn(async move { axum::serve(listener, app).await });
    let (id, handle) = state.launch(cfg, Some(speed), None)?;
    println!("run {id} started at {speed}x");
    if let Ok(Some(record)) = handle.join() {
        print_summary(&record);
    }
    println!("run finished; press Ctrl-C to stop serving");
    runtime.block_on(tokio::signal::ctrl_c())?;
    Ok(())
}

/// Feeds the frames of `record` into `station` at their original arrival
/// times scaled by `speed`, printing each one.
pub fn replay(record: &RunRecord, station: &BaseStation, speed: f64) {
    let id = format!("{}-replay", record.run_id);
    let _ = station.start_run(&id, &record.scenario, record.started_at);
    let start = std::time::Instant::now();
    for entry in &record.frames {
        let due = Duration::from_secs_f64((entry.received_at - record.started_at).max(0.0) / speed);
        if let Some(wait) = due.checked_sub(start.elapsed()) {
            std::thread::sleep(wait);
        }
        station.set_clock(entry.received_at);
        let wire = hex::decode(&entry.wire_hex).unwrap_or_default();
        let _ = station.ingest_frame(entry.frame.clone(), &wire, entry.received_at);
        let f = &entry.frame;
        println!(
            "t={:7.2}s seq={:5} {:<8} alt={:.2} d={:+.2} phi={:+.2} points={}{}",
            entry.received_at,
            f.seq,
            format!("{:?}", f.mode),
            f.altitude,
            f.nav_d,
            f.nav_phi,
            f.points.len(),
            if entry.stale { " stale" } else { "" }
        );
    }
    let _ = station.end_run(
        record.ended_at.unwrap_or(record.started_at),
        record.termination.clone(),
        record.metrics.clone(),
    );
}

fn load_saved_runs(station: &BaseStation, dir: &Path) {
    let Ok(entries) = std::fs::read_dir(dir) else {
        return;
    };
    for path in entries.flatten().map(|e| e.path()) {
        if path.extension().is_some_and(|e| e == "jsonl") {
            match RunRecord::load(&path) {
                Ok(r) => {
                    let _ = station.insert_run(r);
                }
                Err(e) => eprintln!("skipping {}: {e}", path.display()),
            }
        }
    }
}

/// A path to a run log, or the id of a run in `runs_dir`.
pub fn load_run(runs_dir: &Path, run: &str) -> Result<RunRecord> {
    let direct = PathBuf::from(run);
    let path = if direct.is_file() {
        direct
    } else {
        runs_dir.join(format!("{run}.jsonl"))
    };
    RunRecord::load(&path).with_context(|| format!("loading {}", path.display()))
}

/// `1,2,3` or `0..5`.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let seeds: Vec<u64> = if let Some((a, b)) = text.split_once("..") {
        (a.trim().parse()?..b.trim().parse()?).collect()
    } else {
        text.split(',')
            .map(|s| s.trim().parse().with_context(|| format!("bad seed {s:?}")))
            .collect::<Result<_>>()?
    };
    if seeds.is_empty() {
        bail!("no seeds in {text:?}");
    }
    Ok(seeds)
}

fn load_configs(path: &Path) -> Result<Vec<ScenarioConfig>> {
    let files = if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()?;
        files.retain(|p| p.extension().is_some_and(|e| e == "toml"));
        files.sort();
        files
    } else {
        vec![path.to_path_buf()]
    };
    if files.is_empty() {
        bail!("no scenario files in {}", path.display());
    }
    files
        .iter()
        .map(|f| ScenarioConfig::load(f).with_context(|| format!("loading {}", f.display())))
        .collect()
}

pub fn format_metrics(run_id: &str, m: &Metrics) -> String {
    format!(
        "run                 {run_id}\n\
         trajectory error    {:.3} ± {:.3} m\n\
         duration            {:.2} s\n\
         collisions          {}\n\
         distance            {:.1} m\n\
         corners             {} encountered: {} auto, {} recovered, {} unrecovered\n",
        m.trajectory_error_mean,
        m.trajectory_error_std,
        m.duration,
        m.collision_count,
        m.distance_covered,
        m.corners_encountered,
        m.corners_traversed_auto,
        m.corners_recovered,
        m.corners_unrecovered,
    )
}

fn print_summary(record: &RunRecord) {
    println!("termination         {}", record.termination.as_deref().unwrap_or("?"));
    if let Some(m) = &record.metrics {
        print!("{}", format_metrics(&record.run_id, m));
    }
    println!("frames              {}", record.frames.len());
    println!("reports             {}", record.reports.len());
}
