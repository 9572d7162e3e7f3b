// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

//! Direct evaluator over the typed syntax tree.
//!
//! Memory is a set of separate objects addressed by (object, offset), and
//! each object remembers the scalar written at each offset. It shares no code
//! with the IR interpreter and only defines programs that never leave their
//! objects, never read freed memory and never read a partly overwritten
//! scalar. Anything else is reported as [`EvalError::Undefined`].

use std::collections::BTreeMap;

use fsdfi_core::frontend::ast::BinOp;
use fsdfi_core::frontend::typed::{FuncId, TExpr, TExprKind, TStmt, TStmtKind, VarRef};
use fsdfi_core::frontend::{compute_layout, Type, TypedProgram};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalError {
    Undefined(String),
    DivideByZero,
    StepLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Value {
    Int(i64),
    Ptr(Option<(usize, i64)>),
}

impl Value {
    fn int(self) -> i64 {
        match self {
            Value::Int(v) => v,
            Value::Ptr(_) => panic!("typed program used a pointer as an integer"),
        }
    }

    fn ptr(self) -> Option<(usize, i64)> {
        match self {
            Value::Ptr(p) => p,
            Value::Int(_) => panic!("typed program used an integer as a pointer"),
        }
    }
}

struct Object {
    size: i64,
    heap: bool,
    live: bool,
    /// offset -> (width, value)
    cells: BTreeMap<i64, (i64, Value)>,
}

enum Flow {
    Normal,
    Return(Option<Value>),
}

struct Evaluator<'p> {
    prog: &'p TypedProgram,
    objects: Vec<Object>,
    globals: Vec<usize>,
    frames: Vec<Vec<usize>>,
    output: Vec<i64>,
    steps: u64,
    limit: u64,
}

type R<T> = Result<T, EvalError>;

fn undefined<T>(msg: impl Into<String>) -> R<T> {
    Err(EvalError::Undefined(msg.into()))
}

/// Runs `main` with `input` and returns the printed values.
pub fn evaluate(prog: &TypedProgram, input: &[i64], step_limit: u64) -> R<Vec<i64>> {
    let mut ev = Evaluator {
        prog,
        objects: Vec::new(),
        globals: Vec::new(),
        frames: vec![Vec::new()],
        output: Vec::new(),
        steps: 0,
        limit: step_limit,
    };
    for g in &prog.globals {
        let obj = ev.new_object(&g.ty, 1, false);
        ev.globals.push(obj);
    }
    for (i, g) in prog.globals.iter().enumerate() {
        if let Some(init) = &g.init {
            let v = ev.expr(init)?;
            ev.store((ev.globals[i], 0), &g.ty, v)?;
        }
    }
    let main = prog.function(prog.main);
    let args: Vec<Value> = input
        .iter()
        .zip(&main.locals)
        .map(|(v, l)| Value::Int(fit(&l.ty, *v)))
        .collect();
    ev.call(prog.main, args)?;
    Ok(ev.output)
}

fn fit(ty: &Type, v: i64) -> i64 {
    match ty {
        Type::Char => v as i8 as i64,
        _ => v as i32 as i64,
    }
}

impl Evaluator<'_> {
    fn size_of(&self, ty: &Type) -> i64 {
        compute_layout(&self.prog.types, ty)
            .expect("typed program has sized types")
            .size as i64
    }

    fn new_object(&mut self, ty: &Type, count: i64, heap: bool) -> usize {
        let size = self.size_of(ty) * count;
        self.objects.push(Object {
            size,
            heap,
            live: true,
            cells: BTreeMap::new(),
        });
        self.objects.len() - 1
    }

    fn tick(&mut self) -> R<()> {
        self.steps += 1;
        if self.steps > self.limit {
            return Err(EvalError::StepLimit);
        }
        Ok(())
    }

    fn check(&self, (obj, off): (usize, i64), width: i64) -> R<()> {
        let o = &self.objects[obj];
        if !o.live {
            return undefined("access to a dead object");
        }
        if off < 0 || off + width > o.size {
            return undefined(format!(
                "access at {off}+{width} outside object of {}",
                o.size
            ));
        }
        Ok(())
    }

    fn load(&self, at: Option<(usize, i64)>, ty: &Type) -> R<Value> {
        let Some(at) = at else {
            return undefined("null dereference");
        };
        let width = self.size_of(ty);
        self.check(at, width)?;
        let o = &self.objects[at.0];
        let overlapping: Vec<_> = o
            .cells
            .range(at.1 - 7..at.1 + width)
            .filter(|(off, (w, _))| **off + *w > at.1)
            .collect();
        match overlapping.as_slice() {
            [] => Ok(if ty.is_pointer() {
                Value::Ptr(None)
            } else {
                Value::Int(0)
            }),
            [(off, (w, v))] if **off == at.1 && *w == width => Ok(*v),
            _ => undefined("read of a partly overwritten scalar"),
        }
    }

    fn store(&mut self, at: (usize, i64), ty: &Type, v: Value) -> R<()> {
        let width = self.size_of(ty);
        self.check(at, width)?;
        let v = match v {
            Value::Int(i) => Value::Int(fit(ty, i)),
            p => p,
        };
        let cells = &mut self.objects[at.0].cells;
        let stale: Vec<i64> = cells
            .range(at.1 - 7..at.1 + width)
            .filter(|(off, (w, _))| **off + *w > at.1)
            .map(|(off, _)| *off)
            .collect();
        for off in stale {
            cells.remove(&off);
        }
        cells.insert(at.1, (width, v));
        Ok(())
    }

    fn call(&mut self, func: FuncId, args: Vec<Value>) -> R<Option<Value>> {
        if self.frames.len() > 2_000 {
            return Err(EvalError::StepLimit);
        }
        let f = self.prog.function(func);
        let locals: Vec<usize> = f
            .locals
            .iter()
            .map(|l| self.new_object(&l.ty, 1, false))
            .collect();
        for (i, v) in args.into_iter().enumerate() {
            self.store((locals[i], 0), &f.locals[i].ty, v)?;
        }
        self.frames.push(locals);
        let flow = self.block(&f.body)?;
        for obj in self.frames.pop().expect("frame pushed above") {
            self.objects[obj].live = false;
        }
        Ok(match flow {
            Flow::Return(v) => v,
            Flow::Normal if f.ret == Type::Void => None,
            Flow::Normal if f.ret.is_pointer() => Some(Value::Ptr(None)),
            Flow::Normal => Some(Value::Int(0)),
        })
    }

    fn block(&mut self, stmts: &[TStmt]) -> R<Flow> {
        for s in stmts {
            if let Flow::Return(v) = self.stmt(s)? {
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Normal)
    }

    fn stmt(&mut self, s: &TStmt) -> R<Flow> {
        self.tick()?;
        match &s.kind {
            TStmtKind::Decl(local, init) => {
                if let Some(e) = init {
                    let obj = self.frames.last().expect("in a function")[*local as usize];
                    let v = self.expr(e)?;
                    self.store((obj, 0), &e.ty, v)?;
                }
            }
            TStmtKind::Assign(lhs, rhs) => {
                let at = self.lvalue(lhs)?;
                let v = self.expr(rhs)?;
                let Some(at) = at else {
                    return undefined("store through null");
                };
                self.store(at, &lhs.ty, v)?;
            }
            TStmtKind::Block(stmts) => return self.block(stmts),
            TStmtKind::If(c, then, els) => {
                if self.expr(c)?.int() != 0 {
                    return self.stmt(then);
                } else if let Some(e) = els {
                    return self.stmt(e);
                }
            }
            TStmtKind::While(c, body) => {
                while self.expr(c)?.int() != 0 {
                    if let Flow::Return(v) = self.stmt(body)? {
                        return Ok(Flow::Return(v));
                    }
                    self.tick()?;
                }
            }
            TStmtKind::Call(e) => {
                self.expr_or_void(e)?;
            }
            TStmtKind::Return(e) => {
                let v = match e {
                    Some(e) => Some(self.expr(e)?),
                    None => None,
                };
                return Ok(Flow::Return(v));
            }
            TStmtKind::Free(e) => {
                if let Some((obj, off)) = self.expr(e)?.ptr() {
                    let o = &mut self.objects[obj];
                    if off != 0 || !o.heap || !o.live {
                        return undefined("invalid free");
                    }
                    o.live = false;
                }
            }
            TStmtKind::Print(e) => {
                let v = self.expr(e)?.int();
                self.output.push(v);
            }
        }
        Ok(Flow::Normal)
    }

    fn lvalue(&mut self, e: &TExpr) -> R<Option<(usize, i64)>> {
        Ok(match &e.kind {
            TExprKind::Var(VarRef::Global(g)) => Some((self.globals[*g as usize], 0)),
            TExprKind::Var(VarRef::Local(l)) => {
                Some((self.frames.last().expect("in a function")[*l as usize], 0))
            }
            TExprKind::Field(base, i) => {
                let off = self.field_offset(&base.ty, *i);
                self.lvalue(base)?.map(|(o, b)| (o, b + off))
            }
            TExprKind::Arrow(p, i) => {
                let off = self.field_offset(p.ty.pointee().expect("arrow on a pointer"), *i);
                self.expr(p)?.ptr().map(|(o, b)| (o, b + off))
            }
            TExprKind::Index(base, idx) => match &base.ty {
                Type::Array(elem, _) => {
                    let size = self.size_of(elem);
                    let at = self.lvalue(base)?;
                    let i = self.expr(idx)?.int();
                    at.map(|(o, b)| (o, b + i * size))
                }
                ty => {
                    let size = self.size_of(ty.pointee().expect("index on a pointer"));
                    let at = self.expr(base)?.ptr();
                    let i = self.expr(idx)?.int();
                    at.map(|(o, b)| (o, b + i * size))
                }
            },
            TExprKind::Deref(p) => self.expr(p)?.ptr(),
            _ => panic!("typed program used an rvalue as an lvalue"),
        })
    }

    fn field_offset(&self, ty: &Type, index: usize) -> i64 {
        let Type::Struct(id) = ty else {
            panic!("field access on a non-struct");
        };
        self.prog.struct_layout(*id).fields[index].offset as i64
    }

    fn expr_or_void(&mut self, e: &TExpr) -> R<Option<Value>> {
        if let TExprKind::Call(f, args) = &e.kind {
            let mut values = Vec::with_capacity(args.len());
            for a in args {
                values.push(self.expr(a)?);
            }
            return self.call(*f, values);
        }
        self.expr(e).map(Some)
    }

    fn expr(&mut self, e: &TExpr) -> R<Value> {
        self.tick()?;
        Ok(match &e.kind {
            TExprKind::Const(v) => Value::Int(fit(&e.ty, *v)),
            TExprKind::Null => Value::Ptr(None),
            TExprKind::Var(_)
            | TExprKind::Field(..)
            | TExprKind::Arrow(..)
            | TExprKind::Index(..)
            | TExprKind::Deref(_) => {
                let at = self.lvalue(e)?;
                self.load(at, &e.ty)?
            }
            TExprKind::AddrOf(inner) => Value::Ptr(self.lvalue(inner)?),
            TExprKind::Neg(inner) => {
                Value::Int((self.expr(inner)?.int() as i32).wrapping_neg() as i64)
            }
            TExprKind::Narrow(inner) => Value::Int(self.expr(inner)?.int() as i8 as i64),
            TExprKind::Widen(inner) => self.expr(inner)?,
            TExprKind::Binary(op, l, r) => {
                let (l, r) = (self.expr(l)?, self.expr(r)?);
                binary(*op, l, r)?
            }
            TExprKind::Call(..) => self
                .expr_or_void(e)?
                .expect("value-returning call in an expression"),
            TExprKind::Malloc { elem, count } => {
                let n = match count {
                    Some(c) => self.expr(c)?.int(),
                    None => 1,
                };
                if n < 0 {
                    return undefined("negative allocation");
                }
                Value::Ptr(Some((self.new_object(elem, n, true), 0)))
            }
        })
    }
}

fn binary(op: BinOp, l: Value, r: Value) -> R<Value> {
    if let (Value::Ptr(a), Value::Ptr(b)) = (l, r) {
        return Ok(Value::Int(match op {
            BinOp::Eq => (a == b) as i64,
            BinOp::Ne => (a != b) as i64,
            _ => panic!("pointer arithmetic in a typed program"),
        }));
    }
    let (a, b) = (l.int() as i32, r.int() as i32);
    Ok(Value::Int(match op {
        BinOp::Add => a.wrapping_add(b) as i64,
        BinOp::Sub => a.wrapping_sub(b) as i64,
        BinOp::Mul => a.wrapping_mul(b) as i64,
        BinOp::Div => {
            if b == 0 {
                return Err(EvalError::DivideByZero);
            }
            a.wrapping_div(b) as i64
        }
        BinOp::Lt => (a < b) as i64,
        BinOp::Le => (a <= b) as i64,
        BinOp::Gt => (a > b) as i64,
        BinOp::Ge => (a >= b) as i64,
        BinOp::Eq => (a == b) as i64,
        BinOp::Ne => (a != b) as i64,
    }))
}
