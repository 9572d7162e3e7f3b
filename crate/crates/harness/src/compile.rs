// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

use std::path::Path;

use fsdfi_core::frontend::{check_source, SourceProgram, TypedProgram};
use fsdfi_core::ir::{lower, validate_ir, IrProgram};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CompileError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{message}")]
    Frontend { path: String, message: String },
    #[error("{path}: {message}")]
    Lowering { path: String, message: String },
}

/// A checked and lowered program.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub typed: TypedProgram,
    pub ir: IrProgram,
}

pub fn compile_source(path: &str, text: &str) -> Result<Compiled, CompileError> {
    let typed =
        check_source(&SourceProgram::new(path, text)).map_err(|e| CompileError::Frontend {
            path: path.to_string(),
            message: e.to_string(),
        })?;
    let ir = lower(&typed).map_err(|e| CompileError::Lowering {
        path: path.to_string(),
        message: e.to_string(),
    })?;
    validate_ir(&ir).map_err(|e| CompileError::Lowering {
        path: path.to_string(),
        message: e.to_string(),
    })?;
    Ok(Compiled { typed, ir })
}

pub fn compile_file(path: &Path) -> Result<Compiled, CompileError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| CompileError::Io {
        path: shown.clone(),
        source,
    })?;
    compile_source(&shown, &text)
}
