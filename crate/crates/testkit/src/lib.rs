// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

//! Independent oracles and program sources shared by the test suites.

pub mod clayout;
pub mod eval;
pub mod gen;
pub mod oracle;
pub mod programs;
pub mod trace;

use fsdfi_core::frontend::{check_source, SourceProgram, TypedProgram};
use fsdfi_core::ir::{lower, validate_ir, IrProgram};
use fsdfi_core::runtime::{
    interpret, tables_for, ExecutionReport, Mode, NoObserver, Observer, RunConfig,
};
use fsdfi_core::vfa::analyze;

pub fn typed(text: &str) -> TypedProgram {
    check_source(&SourceProgram::new("test.mc", text)).unwrap_or_else(|e| panic!("{e}\n{text}"))
}

/// Parses, checks, lowers and validates `text`, panicking on any error.
pub fn compile(text: &str) -> IrProgram {
    let ir = lower(&typed(text)).unwrap_or_else(|e| panic!("{e}\n{text}"));
    validate_ir(&ir).unwrap_or_else(|e| panic!("{e}\n{text}"));
    ir
}

/// Analyzes and runs a program in one mode.
pub fn run(text: &str, mode: Mode, input: &[i64]) -> ExecutionReport {
    run_observed(
        &compile(text),
        &RunConfig::new(mode),
        input,
        &mut NoObserver,
    )
}

pub fn run_observed(
    prog: &IrProgram,
    config: &RunConfig,
    input: &[i64],
    observer: &mut dyn Observer,
) -> ExecutionReport {
    let analysis = analyze(prog);
    let tables = tables_for(&analysis, config.mode, config.strict_init);
    interpret(prog, tables.as_ref(), config, input, observer).expect("run starts")
}
