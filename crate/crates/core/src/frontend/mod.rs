// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

//! MiniC parsing, type checking and object layout.

pub mod ast;
pub mod layout;
mod lexer;
pub mod parser;
pub mod printer;
pub mod typecheck;
pub mod typed;
pub mod types;

use thiserror::Error;

pub use ast::{Ast, Pos, SourceProgram};
pub use layout::{compute_layout, flatten_fields, FieldSlot, LayoutError, SlotSegment, TypeLayout};
pub use parser::parse;
pub use printer::print_ast;
pub use typecheck::typecheck;
pub use typed::TypedProgram;
pub use types::{StructId, Type, TypeTable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{pos}: parse error: {message}")]
pub struct ParseError {
    pub pos: Pos,
    pub message: String,
}

impl ParseError {
    pub fn new(pos: Pos, message: impl Into<String>) -> Self {
        ParseError {
            pos,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{pos}: type error: {message}")]
pub struct TypeError {
    pub pos: Pos,
    pub message: String,
}

impl TypeError {
    pub fn new(pos: Pos, message: impl Into<String>) -> Self {
        TypeError {
            pos,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontendError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Type(#[from] TypeError),
}

/// Parses and type-checks a source file.
pub fn check_source(source: &SourceProgram) -> Result<TypedProgram, FrontendError> {
    let ast = parse(source)?;
    Ok(typecheck(&ast)?)
}
