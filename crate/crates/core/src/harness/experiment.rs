//! Ensemble sweeps over penalty levels.
//!
//! Each ensemble member is one seed run through every penalty level in
//! order, so all levels of a member see the same Brownian path and the
//! Cauchy gaps between consecutive levels can be formed without keeping more
//! than two paths in memory.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{
    cauchy_gap, CauchyEntry, DiagnosticsError, DiagnosticsOptions, DiagnosticsReport, Estimate, PathStatistics,
};
use crate::formats::{write_field_csv, write_path_csv, FormatError};
use crate::harness::config::{ConfigError, ExperimentSpec};
use crate::integrator::{simulate_path, ReflectionPath};

/// Largest fraction of failed paths an experiment tolerates.
pub const MAX_FAILURE_FRACTION: f64 = 0.1;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{failed} of {total} paths failed, more than the tolerated {:.0}%", MAX_FAILURE_FRACTION * 100.0)]
    TooManyFailures { failed: usize, total: usize },
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

/// Derives the seed of ensemble member `k` from the base seed.
///
/// SplitMix64 finalizer applied to `base + k·φ`; the map is a bijection of
/// u64 for fixed `base`, so distinct members never share a seed.
pub fn member_seed(base: u64, k: u64) -> u64 {
    let mut z = base.wrapping_add(k.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct ExperimentOptions {
    /// Worker threads; 0 uses one per core.
    pub workers: usize,
    /// Directory for per-path dumps; nothing is written when `None`.
    pub path_dir: Option<PathBuf>,
    pub emit_fields: bool,
    pub diagnostics: DiagnosticsOptions,
}

impl ExperimentOptions {
    pub fn from_spec(spec: &ExperimentSpec) -> Self {
        Self {
            workers: spec.workers,
            path_dir: None,
            emit_fields: spec.emit_fields,
            diagnostics: DiagnosticsOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathFailure {
    pub member: usize,
    pub seed: u64,
    pub n_penalty: f64,
    pub error: String,
}

/// Everything measured for one ensemble member.
#[derive(Debug, Clone)]
pub struct MemberResult {
    pub member: usize,
    pub seed: u64,
    /// One entry per penalty level; `None` where the path failed.
    pub stats: Vec<Option<PathStatistics>>,
    /// Gap between levels `i` and `i + 1` where both succeeded.
    pub gaps: Vec<Option<f64>>,
    pub failures: Vec<PathFailure>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub levels: Vec<DiagnosticsReport>,
    pub cauchy: Vec<CauchyEntry>,
    pub failures: Vec<PathFailure>,
    pub seeds: Vec<u64>,
    pub members: Vec<MemberResult>,
}

fn path_stem(n: f64, seed: u64) -> String {
    format!("path_n{n}_seed{seed}")
}

/// Writes the per-step CSV of `path`, plus the final `u` and `L` fields when
/// `emit_fields` is set.
pub fn dump_path(dir: &Path, path: &ReflectionPath, emit_fields: bool) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    let stem = path_stem(path.n_penalty, path.seed);
    write_path_csv(path, BufWriter::new(File::create(dir.join(format!("{stem}.csv")))?))?;
    if emit_fields {
        let last = path.final_snapshot();
        write_field_csv(&last.u, BufWriter::new(File::create(dir.join(format!("{stem}_u.csv")))?))?;
        write_field_csv(&last.l, BufWriter::new(File::create(dir.join(format!("{stem}_l.csv")))?))?;
    }
    Ok(())
}

fn run_member(
    spec: &ExperimentSpec,
    opts: &ExperimentOptions,
    member: usize,
    seed: u64,
) -> Result<MemberResult, HarnessError> {
    let plans = spec.level_plans()?;
    let mut stats = Vec::with_capacity(plans.len());
    let mut gaps = Vec::with_capacity(plans.len().saturating_sub(1));
    let mut failures = Vec::new();
    let mut previous: Option<ReflectionPath> = None;
    for (i, plan) in plans.iter().enumerate() {
        let cfg = spec.level_config(plan, seed);
        let current = match simulate_path(&cfg) {
            Ok(path) => Some(path),
            Err(e) => {
                warn!("member {member} (seed {seed}) at n = {}: {e}; excluded", plan.n_penalty);
                failures.push(PathFailure {
                    member,
                    seed,
                    n_penalty: plan.n_penalty,
                    error: e.to_string(),
                });
                None
            }
        };
        if let Some(path) = &current {
            stats.push(Some(PathStatistics::from_path(path, &opts.diagnostics)?));
            if let Some(dir) = &opts.path_dir {
                dump_path(dir, path, opts.emit_fields)?;
            }
        } else {
            stats.push(None);
        }
        if i > 0 {
            gaps.push(match (&previous, &current) {
                (Some(a), Some(b)) => Some(cauchy_gap(a, b, spec.base.lambda_weight)?),
                _ => None,
            });
        }
        previous = current;
    }
    Ok(MemberResult {
        member,
        seed,
        stats,
        gaps,
        failures,
    })
}

/// Runs the whole ensemble and aggregates per-level estimates.
pub fn run_experiment(spec: &ExperimentSpec, opts: &ExperimentOptions) -> Result<ExperimentReport, HarnessError> {
    let plans = spec.level_plans()?;
    let seeds: Vec<u64> = (0..spec.ensemble_size as u64)
        .map(|k| member_seed(spec.base.seed, k))
        .collect();
    info!(
        "running {} members x {} levels on {} workers",
        seeds.len(),
        plans.len(),
        if opts.workers == 0 { rayon::current_num_threads() } else { opts.workers }
    );
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    let members: Vec<MemberResult> = pool.install(|| {
        seeds
            .par_iter()
            .enumerate()
            .map(|(k, &seed)| run_member(spec, opts, k, seed))
            .collect::<Result<Vec<_>, _>>()
    })?;

    let failures: Vec<PathFailure> = members.iter().flat_map(|m| m.failures.iter().cloned()).collect();
    let total = seeds.len() * plans.len();
    if failures.len() as f64 > MAX_FAILURE_FRACTION * total as f64 {
        return Err(HarnessError::TooManyFailures {
            failed: failures.len(),
            total,
        });
    }

    let mut levels = Vec::with_capacity(plans.len());
    for (i, plan) in plans.iter().enumerate() {
        let stats: Vec<PathStatistics> = members.iter().filter_map(|m| m.stats[i].clone()).collect();
        levels.push(DiagnosticsReport::from_statistics(
            plan.n_penalty,
            plan.dt,
            &stats,
            &opts.diagnostics,
        )?);
    }
    let cauchy: Vec<CauchyEntry> = (0..plans.len().saturating_sub(1))
        .map(|i| {
            let samples: Vec<f64> = members.iter().filter_map(|m| m.gaps[i]).collect();
            CauchyEntry {
                n: plans[i].n_penalty,
                m: plans[i + 1].n_penalty,
                gap: Estimate::from_samples(&samples),
            }
        })
        .collect();
    for (i, level) in levels.iter_mut().enumerate() {
        level.cauchy_gaps = cauchy.iter().filter(|c| c.n == plans[i].n_penalty).cloned().collect();
    }
    Ok(ExperimentReport {
        levels,
        cauchy,
        failures,
        seeds,
        members,
    })
}
