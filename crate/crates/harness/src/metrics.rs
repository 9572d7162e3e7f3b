// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

//! Counter-based overhead proxies.

use fsdfi_core::runtime::{ExecutionReport, Mode, Outcome};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("reports come from different programs ({baseline} vs {protected})")]
    HashMismatch { baseline: String, protected: String },
    #[error("{0} run did not complete")]
    Incomplete(Mode),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Overhead {
    pub baseline_instructions: u64,
    pub protected_instructions: u64,
    pub checks: u64,
    pub records: u64,
    pub metadata_bytes: u64,
    pub program_bytes: u64,
    /// (instructions + checks + records) / baseline instructions - 1
    pub runtime_proxy: f64,
    /// metadata bytes / program bytes
    pub memory_proxy: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// `num / den - 1`, computed as `(num - den) / den`.
fn excess(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        (num as i128 - den as i128) as f64 / den as f64
    }
}

pub fn count_overheads(
    baseline: &ExecutionReport,
    protected: &ExecutionReport,
) -> Result<Overhead, MetricsError> {
    if baseline.program_hash != protected.program_hash {
        return Err(MetricsError::HashMismatch {
            baseline: baseline.program_hash.clone(),
            protected: protected.program_hash.clone(),
        });
    }
    for r in [baseline, protected] {
        if r.outcome != Outcome::Completed {
            return Err(MetricsError::Incomplete(r.mode));
        }
    }
    let p = &protected.counters;
    let n = baseline.counters.instructions;
    let cost = p.instructions + p.loads_checked + p.stores_recorded;
    Ok(Overhead {
        baseline_instructions: n,
        protected_instructions: p.instructions,
        checks: p.loads_checked,
        records: p.stores_recorded,
        metadata_bytes: p.metadata_bytes,
        program_bytes: p.program_bytes,
        runtime_proxy: excess(cost, n),
        memory_proxy: ratio(p.metadata_bytes, p.program_bytes),
    })
}

/// Corpus-wide proxies: ratios of summed counters, with the per-case range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverheadSummary {
    pub cases: usize,
    pub runtime_proxy: f64,
    pub runtime_min: f64,
    pub runtime_max: f64,
    pub memory_proxy: f64,
    pub memory_min: f64,
    pub memory_max: f64,
}

pub fn aggregate_overheads(rows: &[Overhead]) -> Option<OverheadSummary> {
    if rows.is_empty() {
        return None;
    }
    let sum = |f: fn(&Overhead) -> u64| rows.iter().map(f).sum::<u64>();
    let cost = sum(|o| o.protected_instructions + o.checks + o.records);
    let fold = |f: fn(&Overhead) -> f64| {
        rows.iter()
            .map(f)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            })
    };
    let (runtime_min, runtime_max) = fold(|o| o.runtime_proxy);
    let (memory_min, memory_max) = fold(|o| o.memory_proxy);
    Some(OverheadSummary {
        cases: rows.len(),
        runtime_proxy: excess(cost, sum(|o| o.baseline_instructions)),
        runtime_min,
        runtime_max,
        memory_proxy: ratio(sum(|o| o.metadata_bytes), sum(|o| o.program_bytes)),
        memory_min,
        memory_max,
    })
}
