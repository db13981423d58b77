//! Metric aggregation and report files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::orchestrator::{Episode, Termination};

pub const DEFAULT_BUCKET_EDGES: [usize; 4] = [5, 8, 11, 14];

pub const REPORT_FILE: &str = "report.json";
pub const EPISODES_FILE: &str = "episodes.csv";
pub const BUCKETS_FILE: &str = "buckets.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LengthBucket {
    /// `"1-5"` style, or `"15+"` for the open last bucket.
    pub range: String,
    pub min_steps: usize,
    pub max_steps: Option<usize>,
    pub count: usize,
    /// Mean score × 100; null for an empty bucket.
    pub avg_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AggregateReport {
    pub episode_count: usize,
    pub avg_score: f64,
    pub success_rate_pct: f64,
    pub avg_steps: f64,
    pub invalid_failure_pct: f64,
    pub bucket_edges: Vec<usize>,
    pub length_buckets: Vec<LengthBucket>,
}

/// Rounds to 4 decimal places so reports are stable under summation order.
fn round4(x: f64) -> f64 {
    (x * 10_000.0).round() / 10_000.0
}

/// Order-independent mean: values are sorted before summing.
fn mean(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn check_edges(edges: &[usize]) -> Result<(), EvalError> {
    if edges.first() == Some(&0) || edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EvalError::InvalidBuckets(format!("edges must be strictly increasing and >= 1, got {edges:?}")));
    }
    Ok(())
}

/// Bucket ranges implied by `edges`: `[5, 8]` gives 1-5, 6-8, 9+.
pub fn bucket_ranges(edges: &[usize]) -> Vec<(usize, Option<usize>)> {
    let mut lo = 1;
    let mut out = Vec::with_capacity(edges.len() + 1);
    for &e in edges {
        out.push((lo, Some(e)));
        lo = e + 1;
    }
    out.push((lo, None));
    out
}

/// Index of the bucket holding `steps`; zero-step episodes land in the first.
pub fn bucket_of(edges: &[usize], steps: usize) -> usize {
    edges.iter().position(|&e| steps <= e).unwrap_or(edges.len())
}

/// Failed episodes that ended by repeating invalid actions.
fn is_invalid_failure(ep: &Episode) -> bool {
    match ep.termination {
        Termination::InvalidStreak => true,
        Termination::StepLimit => ep.ends_with_invalid_run(ep.limits.max_invalid_streak),
        _ => false,
    }
}

pub fn aggregate(episodes: &[Episode], bucket_edges: &[usize]) -> Result<AggregateReport, EvalError> {
    if episodes.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    check_edges(bucket_edges)?;
    let n = episodes.len();
    let mut scores: Vec<f64> = episodes.iter().map(|e| e.score).collect();
    let successes = episodes.iter().filter(|e| e.is_success()).count();
    let failures = n - successes;
    let invalid = episodes.iter().filter(|e| !e.is_success() && is_invalid_failure(e)).count();
    let total_steps: usize = episodes.iter().map(|e| e.step_count).sum();

    let ranges = bucket_ranges(bucket_edges);
    let mut per_bucket: Vec<Vec<f64>> = vec![Vec::new(); ranges.len()];
    for e in episodes {
        per_bucket[bucket_of(bucket_edges, e.step_count)].push(e.score);
    }
    let length_buckets = ranges
        .into_iter()
        .zip(per_bucket)
        .map(|((lo, hi), mut s)| LengthBucket {
            range: match hi {
                Some(hi) => format!("{lo}-{hi}"),
                None => format!("{lo}+"),
            },
            min_steps: lo,
            max_steps: hi,
            count: s.len(),
            avg_score: (!s.is_empty()).then(|| round4(100.0 * mean(&mut s))),
        })
        .collect();

    Ok(AggregateReport {
        episode_count: n,
        avg_score: round4(100.0 * mean(&mut scores)),
        success_rate_pct: round4(100.0 * successes as f64 / n as f64),
        avg_steps: round4(total_steps as f64 / n as f64),
        invalid_failure_pct: if failures == 0 { 0.0 } else { round4(100.0 * invalid as f64 / failures as f64) },
        bucket_edges: bucket_edges.to_vec(),
        length_buckets,
    })
}

fn csv_err(path: &Path, e: csv::Error) -> EvalError {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => EvalError::Io { path: path.to_path_buf(), source },
        other => EvalError::Io { path: path.to_path_buf(), source: std::io::Error::other(format!("{other:?}")) },
    }
}

/// Writes `report.json`, `episodes.csv` and `buckets.csv` into `dir`.
pub fn write_report(report: &AggregateReport, episodes: &[Episode], dir: &Path) -> Result<(), EvalError> {
    fs::create_dir_all(dir).map_err(|e| EvalError::io(dir, e))?;

    let path = dir.join(REPORT_FILE);
    let mut json = serde_json::to_string_pretty(report).expect("report serializes");
    json.push('\n');
    fs::write(&path, json).map_err(|e| EvalError::io(&path, e))?;

    let path = dir.join(EPISODES_FILE);
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
    w.write_record(["goal_id", "mode", "score", "steps", "termination"]).map_err(|e| csv_err(&path, e))?;
    for e in episodes {
        w.write_record([
            e.goal_id.to_string(),
            e.mode.to_string(),
            e.score.to_string(),
            e.step_count.to_string(),
            e.termination.to_string(),
        ])
        .map_err(|e| csv_err(&path, e))?;
    }
    w.flush().map_err(|e| EvalError::io(&path, e))?;

    let path = dir.join(BUCKETS_FILE);
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
    w.write_record(["range", "min_steps", "max_steps", "count", "avg_score"]).map_err(|e| csv_err(&path, e))?;
    for b in &report.length_buckets {
        w.write_record([
            b.range.clone(),
            b.min_steps.to_string(),
            b.max_steps.map(|m| m.to_string()).unwrap_or_default(),
            b.count.to_string(),
            b.avg_score.map(|s| s.to_string()).unwrap_or_default(),
        ])
        .map_err(|e| csv_err(&path, e))?;
    }
    w.flush().map_err(|e| EvalError::io(&path, e))?;
    Ok(())
}
