//! Multi-seed comparison of scenario conditions.

use super::config::ScenarioConfig;
use super::metrics::Metrics;
use super::scenario::{run_scenario, ScenarioError};
use crate::runlog::RunRecord;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Per-condition means across seeds. `*_std` fields are the sample standard
/// deviation across runs (zero for a single run).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRow {
    pub condition: String,
    pub runs: usize,
    /// Runs that reached the end of the track.
    pub completed: usize,
    pub trajectory_error_mean: f64,
    pub trajectory_error_std: f64,
    pub duration_mean: f64,
    pub duration_std: f64,
    pub collisions_mean: f64,
    pub collisions_std: f64,
    pub corners_encountered: u32,
    pub corners_traversed_auto: u32,
    pub corners_recovered: u32,
    pub corners_unrecovered: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub seeds: Vec<u64>,
    pub rows: Vec<BatchRow>,
    /// Every run, in (condition, seed) order.
    #[serde(skip)]
    pub records: Vec<RunRecord>,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Summarizes finished runs of one condition.
pub fn summarize(condition: &str, records: &[RunRecord]) -> BatchRow {
    let metrics: Vec<&Metrics> = records.iter().filter_map(|r| r.metrics.as_ref()).collect();
    let col = |f: fn(&Metrics) -> f64| mean_std(&metrics.iter().map(|m| f(m)).collect::<Vec<_>>());
    let (te, te_s) = col(|m| m.trajectory_error_mean);
    let (du, du_s) = col(|m| m.duration);
    let (co, co_s) = col(|m| m.collision_count as f64);
    let sum = |f: fn(&Metrics) -> u32| metrics.iter().map(|m| f(m)).sum();
    BatchRow {
        condition: condition.to_string(),
        runs: records.len(),
        completed: records
            .iter()
            .filter(|r| r.termination.as_deref() == Some("track_end"))
            .count(),
        trajectory_error_mean: te,
        trajectory_error_std: te_s,
        duration_mean: du,
        duration_std: du_s,
        collisions_mean: co,
        collisions_std: co_s,
        corners_encountered: sum(|m| m.corners_encountered),
        corners_traversed_auto: sum(|m| m.corners_traversed_auto),
        corners_recovered: sum(|m| m.corners_recovered),
        corners_unrecovered: sum(|m| m.corners_unrecovered),
    }
}

/// Runs every config under every seed (in parallel) and reports one row per
/// config, in the order given.
pub fn batch_report(configs: &[ScenarioConfig], seeds: &[u64]) -> Result<BatchReport, ScenarioError> {
    let jobs: Vec<ScenarioConfig> = configs
        .iter()
        .flat_map(|c| seeds.iter().map(move |&s| ScenarioConfig { seed: s, ..c.clone() }))
        .collect();
    let records = jobs.par_iter().map(run_scenario).collect::<Result<Vec<_>, _>>()?;
    let rows = configs
        .iter()
        .enumerate()
        .map(|(i, c)| summarize(&c.name, &records[i * seeds.len()..(i + 1) * seeds.len()]))
        .collect();
    Ok(BatchReport {
        seeds: seeds.to_vec(),
        rows,
        records,
    })
}

const HEADERS: [&str; 8] = [
    "condition",
    "runs",
    "completed",
    "trajectory_error_m",
    "duration_s",
    "collisions",
    "corners_auto/recovered/unrecovered",
    "corners_encountered",
];

impl BatchReport {
    fn cells(&self) -> Vec<[String; 8]> {
        self.rows
            .iter()
            .map(|r| {
                [
                    r.condition.clone(),
                    r.runs.to_string(),
                    r.completed.to_string(),
                    format!("{:.2} ± {:.2}", r.trajectory_error_mean, r.trajectory_error_std),
                    format!("{:.2} ± {:.2}", r.duration_mean, r.duration_std),
                    format!("{:.1} ± {:.1}", r.collisions_mean, r.collisions_std),
                    format!(
                        "{}/{}/{}",
                        r.corners_traversed_auto, r.corners_recovered, r.corners_unrecovered
                    ),
                    r.corners_encountered.to_string(),
                ]
            })
            .collect()
    }

    /// Column-aligned plain text table.
    pub fn to_text(&self) -> String {
        let cells = self.cells();
        let mut widths = HEADERS.map(|h| h.chars().count());
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, row: &[String]| {
            let parts: Vec<String> = row
                .iter()
                .zip(widths)
                .enumerate()
                .map(|(i, (c, w))| {
                    let pad = w - c.chars().count();
                    if i == 0 {
                        format!("{c}{}", " ".repeat(pad))
                    } else {
                        format!("{}{c}", " ".repeat(pad))
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(&mut out, &HEADERS.map(String::from));
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        line(&mut out, &rule);
        for row in &cells {
            line(&mut out, row);
        }
        out
    }

    /// One CSV line per condition with raw numbers.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).expect("rows serialize");
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8")
    }
}
