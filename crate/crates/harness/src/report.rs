// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use fsdfi_core::runtime::Mode;
use thiserror::Error;

use crate::runner::CorpusReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    TextTable,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown report format `{0}` (expected json or text-table)")]
pub struct UnknownFormat(pub String);

impl FromStr for ReportFormat {
    type Err = UnknownFormat;

    fn from_str(s: &str) -> Result<Self, UnknownFormat> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "text-table" => Ok(ReportFormat::TextTable),
            _ => Err(UnknownFormat(s.to_string())),
        }
    }
}

pub fn render_report(report: &CorpusReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::TextTable => text_table(report),
    }
}

pub fn emit_report(
    report: &CorpusReport,
    format: ReportFormat,
    path: &Path,
) -> std::io::Result<()> {
    std::fs::write(path, render_report(report, format))
}

pub fn read_report(text: &str) -> serde_json::Result<CorpusReport> {
    serde_json::from_str(text)
}

fn short(mode: Mode) -> &'static str {
    match mode {
        Mode::Baseline => "baseline",
        Mode::Protected => "protected",
        Mode::FieldInsensitive => "field-insens",
    }
}

/// One row per case between the two rules, then the totals.
fn text_table(report: &CorpusReport) -> String {
    let id_w = report
        .cases
        .iter()
        .map(|c| c.id.len())
        .max()
        .unwrap_or(0)
        .max(4);
    let mut out = String::new();
    let _ = write!(out, "{:<id_w$}  {:<23}", "case", "category");
    for m in &report.modes {
        let _ = write!(out, "  {:<14}", short(*m));
    }
    let _ = writeln!(out, "  {:>8}  {:>8}", "runtime", "memory");
    let rule = "-".repeat(out.trim_end().len());
    let _ = writeln!(out, "{rule}");
    for c in &report.cases {
        let _ = write!(out, "{:<id_w$}  {:<23}", c.id, c.category.name());
        for m in &report.modes {
            let cell = match c.run(*m) {
                Some(r) if r.matched => r.outcome.name().to_string(),
                Some(r) => format!("{}!", r.outcome.name()),
                None => "-".to_string(),
            };
            let _ = write!(out, "  {cell:<14}");
        }
        match &c.overhead {
            Some(o) => {
                let _ = writeln!(out, "  {:>8.3}  {:>8.3}", o.runtime_proxy, o.memory_proxy);
            }
            None => {
                let _ = writeln!(out, "  {:>8}  {:>8}", "-", "-");
            }
        }
    }
    let _ = writeln!(out, "{rule}");
    for (mode, n) in &report.detected {
        let _ = writeln!(out, "detected {mode}: {n}/{}", report.cases.len());
    }
    let _ = writeln!(
        out,
        "precision delta: {}",
        report.precision_delta.join(", ")
    );
    if let Some(o) = &report.overhead {
        let _ = writeln!(
            out,
            "runtime proxy: {:.3} (range {:.3}..{:.3})",
            o.runtime_proxy, o.runtime_min, o.runtime_max
        );
        let _ = writeln!(
            out,
            "memory proxy: {:.3} (range {:.3}..{:.3})",
            o.memory_proxy, o.memory_min, o.memory_max
        );
    }
    let _ = writeln!(out, "mismatches: {}", report.mismatches.len());
    for m in &report.mismatches {
        let _ = writeln!(
            out,
            "  {} [{}]: expected {}, got {}",
            m.case,
            m.mode,
            m.expected.name(),
            m.actual.name()
        );
    }
    out
}
