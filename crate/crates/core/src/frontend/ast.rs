// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

//! Untyped syntax tree produced by the parser.

use std::fmt;

use serde::{Deserialize, Serialize};

/// 1-based source position.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize,
)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl Pos {
    pub fn new(line: u32, col: u32) -> Self {
        Pos { line, col }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// A source file handed to the parser.
#[derive(Debug, Clone)]
pub struct SourceProgram {
    pub text: String,
    pub path: String,
}

impl SourceProgram {
    pub fn new(path: impl Into<String>, text: impl Into<String>) -> Self {
        SourceProgram {
            text: text.into(),
            path: path.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeExpr {
    Int,
    Char,
    Void,
    Struct(String),
    Pointer(Box<TypeExpr>),
    Array(Box<TypeExpr>, u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ast {
    pub items: Vec<Item>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    Struct(StructDecl),
    Global(VarDecl),
    Function(Function),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructDecl {
    pub name: String,
    pub fields: Vec<FieldDecl>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldDecl {
    pub name: String,
    pub ty: TypeExpr,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarDecl {
    pub name: String,
    pub ty: TypeExpr,
    pub init: Option<Expr>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: TypeExpr,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Function {
    pub name: String,
    pub ret: TypeExpr,
    pub params: Vec<Param>,
    pub body: Vec<Stmt>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Decl(VarDecl),
    Assign(Expr, Expr),
    Block(Vec<Stmt>),
    If(Expr, Box<Stmt>, Option<Box<Stmt>>),
    While(Expr, Box<Stmt>),
    Expr(Expr),
    Return(Option<Expr>),
    Free(Expr),
    Print(Expr),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
        }
    }

    pub fn is_comparison(self) -> bool {
        !matches!(self, BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    IntLit(i64),
    CharLit(u8),
    Var(String),
    Field(Box<Expr>, String),
    Arrow(Box<Expr>, String),
    Index(Box<Expr>, Box<Expr>),
    AddrOf(Box<Expr>),
    Deref(Box<Expr>),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
    /// `malloc(sizeof(T))` or `malloc(sizeof(T) * count)`.
    Malloc {
        ty: TypeExpr,
        count: Option<Box<Expr>>,
    },
}

impl Ast {
    /// Resets every position to the default so that trees can be compared
    /// structurally.
    pub fn clear_positions(&mut self) {
        for item in &mut self.items {
            match item {
                Item::Struct(s) => {
                    s.pos = Pos::default();
                    for f in &mut s.fields {
                        f.pos = Pos::default();
                    }
                }
                Item::Global(g) => clear_decl(g),
                Item::Function(func) => {
                    func.pos = Pos::default();
                    for p in &mut func.params {
                        p.pos = Pos::default();
                    }
                    func.body.iter_mut().for_each(clear_stmt);
                }
            }
        }
    }
}

fn clear_decl(d: &mut VarDecl) {
    d.pos = Pos::default();
    if let Some(e) = &mut d.init {
        clear_expr(e);
    }
}

fn clear_stmt(s: &mut Stmt) {
    s.pos = Pos::default();
    match &mut s.kind {
        StmtKind::Decl(d) => clear_decl(d),
        StmtKind::Assign(l, r) => {
            clear_expr(l);
            clear_expr(r);
        }
        StmtKind::Block(b) => b.iter_mut().for_each(clear_stmt),
        StmtKind::If(c, t, e) => {
            clear_expr(c);
            clear_stmt(t);
            if let Some(e) = e {
                clear_stmt(e);
            }
        }
        StmtKind::While(c, b) => {
            clear_expr(c);
            clear_stmt(b);
        }
        StmtKind::Expr(e) | StmtKind::Free(e) | StmtKind::Print(e) => clear_expr(e),
        StmtKind::Return(e) => {
            if let Some(e) = e {
                clear_expr(e);
            }
        }
    }
}

fn clear_expr(e: &mut Expr) {
    e.pos = Pos::default();
    match &mut e.kind {
        ExprKind::IntLit(_) | ExprKind::CharLit(_) | ExprKind::Var(_) => {}
        ExprKind::Field(b, _) | ExprKind::Arrow(b, _) => clear_expr(b),
        ExprKind::AddrOf(b) | ExprKind::Deref(b) | ExprKind::Neg(b) => clear_expr(b),
        ExprKind::Index(a, b) | ExprKind::Binary(_, a, b) => {
            clear_expr(a);
            clear_expr(b);
        }
        ExprKind::Call(_, args) => args.iter_mut().for_each(clear_expr),
        ExprKind::Malloc { count, .. } => {
            if let Some(c) = count {
                clear_expr(c);
            }
        }
    }
}
