// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

//! Type-annotated program produced by [`typecheck`](super::typecheck).

use super::ast::{BinOp, Pos};
use super::layout::TypeLayout;
use super::types::{StructId, Type, TypeTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FuncId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarRef {
    Global(u32),
    Local(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypedProgram {
    pub types: TypeTable,
    /// Layout of every struct, indexed by `StructId`.
    pub struct_layouts: Vec<TypeLayout>,
    pub globals: Vec<GlobalVar>,
    pub functions: Vec<TFunction>,
    pub main: FuncId,
}

impl TypedProgram {
    pub fn function(&self, id: FuncId) -> &TFunction {
        &self.functions[id.0 as usize]
    }

    pub fn struct_layout(&self, id: StructId) -> &TypeLayout {
        &self.struct_layouts[id.0 as usize]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalVar {
    pub name: String,
    pub ty: Type,
    pub init: Option<TExpr>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalVar {
    pub name: String,
    pub ty: Type,
    pub pos: Pos,
    pub is_param: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TFunction {
    pub name: String,
    pub ret: Type,
    /// Parameters are the first `param_count` locals.
    pub param_count: usize,
    pub locals: Vec<LocalVar>,
    pub body: Vec<TStmt>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TStmt {
    pub kind: TStmtKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TStmtKind {
    /// Local declaration; only an initializer produces a write.
    Decl(u32, Option<TExpr>),
    Assign(TExpr, TExpr),
    Block(Vec<TStmt>),
    If(TExpr, Box<TStmt>, Option<Box<TStmt>>),
    While(TExpr, Box<TStmt>),
    Call(TExpr),
    Return(Option<TExpr>),
    Free(TExpr),
    Print(TExpr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TExpr {
    pub kind: TExprKind,
    pub ty: Type,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TExprKind {
    Const(i64),
    Null,
    Var(VarRef),
    /// Member `index` of a struct-typed lvalue.
    Field(Box<TExpr>, usize),
    /// Member `index` of the struct a pointer addresses.
    Arrow(Box<TExpr>, usize),
    /// Base is an array lvalue or a pointer rvalue.
    Index(Box<TExpr>, Box<TExpr>),
    AddrOf(Box<TExpr>),
    Deref(Box<TExpr>),
    Neg(Box<TExpr>),
    Binary(BinOp, Box<TExpr>, Box<TExpr>),
    Call(FuncId, Vec<TExpr>),
    Malloc {
        elem: Type,
        count: Option<Box<TExpr>>,
    },
    /// int -> char truncation.
    Narrow(Box<TExpr>),
    /// char -> int sign extension.
    Widen(Box<TExpr>),
}

impl TExpr {
    pub fn is_lvalue(&self) -> bool {
        match &self.kind {
            TExprKind::Var(_)
            | TExprKind::Arrow(..)
            | TExprKind::Index(..)
            | TExprKind::Deref(_) => true,
            TExprKind::Field(base, _) => base.is_lvalue(),
            _ => false,
        }
    }
}
