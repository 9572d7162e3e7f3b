// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

use fsdfi_core::ir::IrProgram;
use fsdfi_core::runtime::{
    interpret, tables_for, Counters, ExecutionReport, Mode, NoObserver, Outcome, RunConfig,
    RunError,
};
use fsdfi_core::vfa::Analysis;

/// One program and input run under every mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeComparison {
    pub baseline: ExecutionReport,
    pub field_insensitive: ExecutionReport,
    pub protected: ExecutionReport,
}

impl ModeComparison {
    /// (baseline, field-insensitive, protected)
    pub fn outcomes(&self) -> (Outcome, Outcome, Outcome) {
        (
            self.baseline.outcome,
            self.field_insensitive.outcome,
            self.protected.outcome,
        )
    }

    pub fn counters(&self) -> (Counters, Counters, Counters) {
        (
            self.baseline.counters,
            self.field_insensitive.counters,
            self.protected.counters,
        )
    }

    pub fn get(&self, mode: Mode) -> &ExecutionReport {
        match mode {
            Mode::Baseline => &self.baseline,
            Mode::FieldInsensitive => &self.field_insensitive,
            Mode::Protected => &self.protected,
        }
    }
}

/// Runs one mode with tables taken from `analysis`.
pub fn run_mode(
    prog: &IrProgram,
    analysis: &Analysis,
    input: &[i64],
    config: &RunConfig,
) -> Result<ExecutionReport, RunError> {
    let tables = tables_for(analysis, config.mode, config.strict_init);
    interpret(prog, tables.as_ref(), config, input, &mut NoObserver)
}

/// Runs `prog` under all three modes; `config` supplies everything but the mode.
pub fn compare_modes(
    prog: &IrProgram,
    analysis: &Analysis,
    input: &[i64],
    config: &RunConfig,
) -> Result<ModeComparison, RunError> {
    let with = |mode| RunConfig { mode, ..*config };
    Ok(ModeComparison {
        baseline: run_mode(prog, analysis, input, &with(Mode::Baseline))?,
        field_insensitive: run_mode(prog, analysis, input, &with(Mode::FieldInsensitive))?,
        protected: run_mode(prog, analysis, input, &with(Mode::Protected))?,
    })
}
