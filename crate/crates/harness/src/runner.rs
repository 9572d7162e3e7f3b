// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use fsdfi_core::runtime::{ExecutionReport, Mode, Outcome, RunConfig};
use fsdfi_core::vfa::{analyze, Analysis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compare::run_mode;
use crate::corpus::{load_corpus, Category, Corpus, CorpusCase, CorpusError};
use crate::metrics::{aggregate_overheads, count_overheads, Overhead, OverheadSummary};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeRun {
    pub mode: Mode,
    pub expected: Outcome,
    pub outcome: Outcome,
    pub matched: bool,
    pub use_site: Option<u32>,
    pub observed_def: Option<u32>,
    pub instructions: u64,
    pub loads_checked: u64,
    pub stores_recorded: u64,
    pub peak_live_slots: u64,
    pub metadata_bytes: u64,
    pub program_bytes: u64,
    pub output: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub id: String,
    pub category: Category,
    pub source: String,
    pub input: Vec<i64>,
    pub runs: Vec<ModeRun>,
    pub overhead: Option<Overhead>,
}

impl CaseResult {
    pub fn run(&self, mode: Mode) -> Option<&ModeRun> {
        self.runs.iter().find(|r| r.mode == mode)
    }

    pub fn detected(&self, mode: Mode) -> bool {
        self.run(mode)
            .is_some_and(|r| r.outcome == Outcome::Violation)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mismatch {
    pub case: String,
    pub mode: Mode,
    pub expected: Outcome,
    pub actual: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub report_version: u32,
    pub modes: Vec<Mode>,
    pub cases: Vec<CaseResult>,
    /// Cases ending in a violation, per mode name.
    pub detected: BTreeMap<String, usize>,
    /// Cases detected by protected mode but not by field-insensitive mode.
    pub precision_delta: Vec<String>,
    pub mismatches: Vec<Mismatch>,
    pub overhead: Option<OverheadSummary>,
}

impl CorpusReport {
    pub fn all_matched(&self) -> bool {
        self.mismatches.is_empty()
    }

    pub fn detected_by(&self, mode: Mode) -> BTreeSet<&str> {
        self.cases
            .iter()
            .filter(|c| c.detected(mode))
            .map(|c| c.id.as_str())
            .collect()
    }
}

/// Loads, validates and runs the corpus in `dir`.
pub fn run_corpus(
    dir: &Path,
    modes: &[Mode],
    config: &RunConfig,
) -> Result<CorpusReport, CorpusError> {
    let corpus = load_corpus(dir)?;
    run_loaded(&corpus, modes, config)
}

pub fn run_loaded(
    corpus: &Corpus,
    modes: &[Mode],
    config: &RunConfig,
) -> Result<CorpusReport, CorpusError> {
    let mut modes = modes.to_vec();
    modes.sort();
    modes.dedup();
    let analyses: BTreeMap<&str, Analysis> = corpus
        .programs
        .par_iter()
        .map(|(name, p)| (name.as_str(), analyze(&p.ir)))
        .collect();

    let cases: Vec<CaseResult> = corpus
        .cases
        .par_iter()
        .map(|case| {
            run_case(
                corpus,
                &analyses[case.spec.source.as_str()],
                case,
                &modes,
                config,
            )
        })
        .collect::<Result<_, _>>()?;
    Ok(assemble(modes, cases))
}

fn run_case(
    corpus: &Corpus,
    analysis: &Analysis,
    case: &CorpusCase,
    modes: &[Mode],
    config: &RunConfig,
) -> Result<CaseResult, CorpusError> {
    let prog = &corpus.program(case).ir;
    let mut reports: Vec<ExecutionReport> = Vec::new();
    for &mode in modes {
        let cfg = RunConfig { mode, ..*config };
        let report = run_mode(prog, analysis, &case.spec.input, &cfg)
            .map_err(|e| CorpusError::Malformed(vec![format!("{}: {e}", case.id)]))?;
        reports.push(report);
    }
    let find = |m: Mode| reports.iter().find(|r| r.mode == m);
    let overhead = match (find(Mode::Baseline), find(Mode::Protected)) {
        (Some(b), Some(p)) => count_overheads(b, p).ok(),
        _ => None,
    };
    let runs = reports
        .iter()
        .map(|r| {
            let expected = case.spec.expect.get(r.mode);
            ModeRun {
                mode: r.mode,
                expected,
                outcome: r.outcome,
                matched: expected == r.outcome,
                use_site: r.violation.as_ref().map(|v| v.use_site),
                observed_def: r.violation.as_ref().map(|v| v.observed_def),
                instructions: r.counters.instructions,
                loads_checked: r.counters.loads_checked,
                stores_recorded: r.counters.stores_recorded,
                peak_live_slots: r.counters.peak_live_slots,
                metadata_bytes: r.counters.metadata_bytes,
                program_bytes: r.counters.program_bytes,
                output: r.output.clone(),
            }
        })
        .collect();
    Ok(CaseResult {
        id: case.id.clone(),
        category: case.spec.category,
        source: case.spec.source.clone(),
        input: case.spec.input.clone(),
        runs,
        overhead,
    })
}

fn assemble(modes: Vec<Mode>, cases: Vec<CaseResult>) -> CorpusReport {
    let detected = modes
        .iter()
        .map(|m| {
            (
                m.name().to_string(),
                cases.iter().filter(|c| c.detected(*m)).count(),
            )
        })
        .collect();
    let precision_delta =
        if modes.contains(&Mode::Protected) && modes.contains(&Mode::FieldInsensitive) {
            cases
                .iter()
                .filter(|c| c.detected(Mode::Protected) && !c.detected(Mode::FieldInsensitive))
                .map(|c| c.id.clone())
                .collect()
        } else {
            Vec::new()
        };
    let mismatches = cases
        .iter()
        .flat_map(|c| {
            c.runs.iter().filter(|r| !r.matched).map(|r| Mismatch {
                case: c.id.clone(),
                mode: r.mode,
                expected: r.expected,
                actual: r.outcome,
            })
        })
        .collect();
    let overheads: Vec<Overhead> = cases.iter().filter_map(|c| c.overhead).collect();
    CorpusReport {
        report_version: REPORT_VERSION,
        modes,
        cases,
        detected,
        precision_delta,
        mismatches,
        overhead: aggregate_overheads(&overheads),
    }
}
