// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

//! Corpus runner, mode comparison and overhead accounting behind the `fsdfi`
//! command.

pub mod compare;
pub mod compile;
pub mod corpus;
pub mod metrics;
pub mod report;
pub mod runner;

pub use compare::{compare_modes, run_mode, ModeComparison};
pub use compile::{compile_file, compile_source, CompileError, Compiled};
pub use corpus::{load_corpus, CaseFile, Category, Corpus, CorpusCase, CorpusError, Expectation};
pub use metrics::{aggregate_overheads, count_overheads, MetricsError, Overhead, OverheadSummary};
pub use report::{emit_report, read_report, render_report, ReportFormat, UnknownFormat};
pub use runner::{run_corpus, run_loaded, CaseResult, CorpusReport, Mismatch, ModeRun};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
