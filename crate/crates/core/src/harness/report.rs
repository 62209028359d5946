//! Writes experiment results to an output directory.
//!
//! Layout:
//! - `summary.csv`: one row per `(level, estimator)`
//! - `level_<i>.csv`: estimators of level `i`
//! - `cauchy.csv`: gaps between consecutive levels
//! - `report.json`: flat key/value view of the above
//! - `manifest.txt`: configuration echo, seeds, version, a content hash over
//!   all other outputs, and the wall time (the only non-deterministic line)

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::formats::FORMAT_TAG;
use crate::harness::config::ExperimentSpec;
use crate::harness::experiment::{ExperimentReport, HarnessError};

pub const SUMMARY_COLUMNS: &str = "n_penalty,name,estimate,stderr,n_samples";
pub const LEVEL_COLUMNS: &str = "name,estimate,stderr,n_samples";
pub const CAUCHY_COLUMNS: &str = "n,m,gap,stderr,n_samples";

/// Paths written by [`emit_report`].
#[derive(Debug, Clone)]
pub struct EmittedReport {
    pub files: Vec<PathBuf>,
    /// SHA-256 over every output except `manifest.txt`, plus the config echo.
    pub content_hash: String,
}

fn level_rows(report: &ExperimentReport, i: usize) -> Vec<(String, f64, f64, usize)> {
    let level = &report.levels[i];
    let mut rows: Vec<_> = level
        .estimators()
        .into_iter()
        .map(|(name, e)| (name.to_string(), e.mean, e.stderr, e.n_samples))
        .collect();
    rows.push(("vi_min".into(), level.vi_min, 0.0, level.n_paths));
    rows.push(("vi_violations".into(), level.vi_violations as f64, 0.0, level.vi_trials));
    rows
}

fn render_summary(report: &ExperimentReport) -> String {
    let mut s = format!("{FORMAT_TAG} summary\n{SUMMARY_COLUMNS}\n");
    for (i, level) in report.levels.iter().enumerate() {
        for (name, mean, se, count) in level_rows(report, i) {
            let _ = writeln!(s, "{:?},{name},{mean:?},{se:?},{count}", level.n_penalty);
        }
    }
    s
}

fn render_level(report: &ExperimentReport, i: usize) -> String {
    let level = &report.levels[i];
    let mut s = format!("{FORMAT_TAG} estimators n={:?} dt={:?}\n{LEVEL_COLUMNS}\n", level.n_penalty, level.dt);
    for (name, mean, se, count) in level_rows(report, i) {
        let _ = writeln!(s, "{name},{mean:?},{se:?},{count}");
    }
    s
}

fn render_cauchy(report: &ExperimentReport) -> String {
    let mut s = format!("{FORMAT_TAG} cauchy\n{CAUCHY_COLUMNS}\n");
    for c in &report.cauchy {
        let _ = writeln!(
            s,
            "{:?},{:?},{:?},{:?},{}",
            c.n, c.m, c.gap.mean, c.gap.stderr, c.gap.n_samples
        );
    }
    s
}

fn flatten(prefix: &str, value: &Value, out: &mut BTreeMap<String, Value>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), v, out);
            }
        }
        other => {
            out.insert(prefix.to_string(), other.clone());
        }
    }
}

fn render_json(report: &ExperimentReport) -> Result<String, HarnessError> {
    let nested = serde_json::json!({
        "format": FORMAT_TAG,
        "levels": report.levels,
        "cauchy": report.cauchy,
        "failures": report.failures,
    });
    let mut flat = BTreeMap::new();
    flatten("", &nested, &mut flat);
    serde_json::to_string_pretty(&flat)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| HarnessError::Io(std::io::Error::other(e)))
}

/// Renders every output except the manifest and hashes them together with
/// the configuration echo. Identical inputs give byte-identical outputs.
pub fn render_outputs(
    spec: &ExperimentSpec,
    report: &ExperimentReport,
) -> Result<(Vec<(String, String)>, String), HarnessError> {
    let mut outputs: Vec<(String, String)> = vec![("summary.csv".into(), render_summary(report))];
    for i in 0..report.levels.len() {
        outputs.push((format!("level_{i}.csv"), render_level(report, i)));
    }
    outputs.push(("cauchy.csv".into(), render_cauchy(report)));
    outputs.push(("report.json".into(), render_json(report)?));

    let mut hasher = Sha256::new();
    hasher.update(spec.to_config_string().as_bytes());
    for (name, body) in &outputs {
        hasher.update(name.as_bytes());
        hasher.update([0u8]);
        hasher.update(body.as_bytes());
    }
    let hash = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();
    Ok((outputs, hash))
}

/// Writes all report files into `dir`, creating it if needed.
///
/// Refuses to write an empty report.
pub fn emit_report(
    spec: &ExperimentSpec,
    report: &ExperimentReport,
    dir: &Path,
    wall_time: Duration,
) -> Result<EmittedReport, HarnessError> {
    if report.levels.is_empty() || report.levels.iter().any(|l| l.n_paths == 0) {
        return Err(HarnessError::Io(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            "refusing to write a report with no completed paths",
        )));
    }
    fs::create_dir_all(dir)?;
    let (mut outputs, content_hash) = render_outputs(spec, report)?;
    let config_echo = spec.to_config_string();

    let mut manifest = format!("{FORMAT_TAG} manifest\n");
    let _ = writeln!(manifest, "crate = reflectx {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(manifest, "content_hash = {content_hash}");
    let _ = writeln!(manifest, "members = {}", report.seeds.len());
    for (k, seed) in report.seeds.iter().enumerate() {
        let _ = writeln!(manifest, "seed[{k}] = {seed}");
    }
    let _ = writeln!(manifest, "failures = {}", report.failures.len());
    for f in &report.failures {
        let _ = writeln!(manifest, "failure = member {} seed {} n {:?}: {}", f.member, f.seed, f.n_penalty, f.error);
    }
    let _ = writeln!(manifest, "--- config ---");
    manifest.push_str(&config_echo);
    let _ = writeln!(manifest, "--- end config ---");
    let _ = writeln!(manifest, "wall_time_seconds = {:.3}", wall_time.as_secs_f64());
    outputs.push(("manifest.txt".into(), manifest));

    let mut files = Vec::with_capacity(outputs.len());
    for (name, body) in outputs {
        let path = dir.join(name);
        fs::write(&path, body)?;
        files.push(path);
    }
    Ok(EmittedReport { files, content_hash })
}
