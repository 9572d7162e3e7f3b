// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;

use super::ast::*;
use super::layout::compute_layout;
use super::typed::*;
use super::types::{FieldDef, Type, TypeTable};
use super::TypeError;

pub fn typecheck(ast: &Ast) -> Result<TypedProgram, TypeError> {
    let mut types = TypeTable::new();
    for item in &ast.items {
        if let Item::Struct(s) = item {
            types
                .declare(&s.name, s.pos)
                .ok_or_else(|| TypeError::new(s.pos, format!("struct {} redeclared", s.name)))?;
        }
    }
    for item in &ast.items {
        if let Item::Struct(s) = item {
            let id = types.lookup(&s.name).expect("declared above");
            let mut fields: Vec<FieldDef> = Vec::new();
            for f in &s.fields {
                if fields.iter().any(|g| g.name == f.name) {
                    return Err(TypeError::new(
                        f.pos,
                        format!("duplicate field `{}` in struct {}", f.name, s.name),
                    ));
                }
                let ty = resolve_type(&types, &f.ty, f.pos)?;
                if ty == Type::Void {
                    return Err(TypeError::new(f.pos, "field cannot have type void"));
                }
                fields.push(FieldDef {
                    name: f.name.clone(),
                    ty,
                    pos: f.pos,
                });
            }
            types.set_fields(id, fields);
        }
    }
    let mut struct_layouts = Vec::with_capacity(types.len());
    for (id, def) in types.iter() {
        let layout = compute_layout(&types, &Type::Struct(id))
            .map_err(|e| TypeError::new(def.pos, e.to_string()))?;
        struct_layouts.push(layout);
    }

    let mut checker = Checker {
        types: &types,
        globals: Vec::new(),
        global_names: HashMap::new(),
        signatures: Vec::new(),
        func_names: HashMap::new(),
    };

    for item in &ast.items {
        if let Item::Function(f) = item {
            checker.declare_function(f)?;
        }
    }
    let mut functions = Vec::new();
    for item in &ast.items {
        match item {
            Item::Global(g) => checker.declare_global(g)?,
            Item::Function(_) | Item::Struct(_) => {}
        }
    }
    for item in &ast.items {
        if let Item::Function(f) = item {
            functions.push(checker.function(f)?);
        }
    }

    let main = *checker
        .func_names
        .get("main")
        .ok_or_else(|| TypeError::new(Pos::new(1, 1), "program has no `main` function"))?;
    let main_fn = &functions[main.0 as usize];
    if !matches!(main_fn.ret, Type::Void | Type::Int) {
        return Err(TypeError::new(
            main_fn.pos,
            "`main` must return void or int",
        ));
    }
    if main_fn.locals[..main_fn.param_count]
        .iter()
        .any(|p| !p.ty.is_integral())
    {
        return Err(TypeError::new(
            main_fn.pos,
            "`main` parameters receive program input and must be int or char",
        ));
    }

    let globals = checker.globals;
    Ok(TypedProgram {
        types,
        struct_layouts,
        globals,
        functions,
        main,
    })
}

fn resolve_type(types: &TypeTable, ty: &TypeExpr, pos: Pos) -> Result<Type, TypeError> {
    Ok(match ty {
        TypeExpr::Int => Type::Int,
        TypeExpr::Char => Type::Char,
        TypeExpr::Void => Type::Void,
        TypeExpr::Struct(name) => Type::Struct(
            types
                .lookup(name)
                .ok_or_else(|| TypeError::new(pos, format!("unknown struct `{name}`")))?,
        ),
        TypeExpr::Pointer(inner) => {
            let inner = resolve_type(types, inner, pos)?;
            if inner == Type::Void {
                return Err(TypeError::new(pos, "void pointers are not supported"));
            }
            Type::pointer_to(inner)
        }
        TypeExpr::Array(inner, n) => {
            let inner = resolve_type(types, inner, pos)?;
            if inner == Type::Void {
                return Err(TypeError::new(pos, "array of void"));
            }
            Type::Array(Box::new(inner), *n)
        }
    })
}

struct Signature {
    params: Vec<Type>,
    ret: Type,
}

struct Checker<'a> {
    types: &'a TypeTable,
    globals: Vec<GlobalVar>,
    global_names: HashMap<String, u32>,
    signatures: Vec<Signature>,
    func_names: HashMap<String, FuncId>,
}

/// Per-function state.
struct Scope {
    locals: Vec<LocalVar>,
    frames: Vec<HashMap<String, u32>>,
    ret: Type,
    in_function: bool,
}

impl Scope {
    fn lookup(&self, name: &str) -> Option<u32> {
        self.frames.iter().rev().find_map(|f| f.get(name).copied())
    }
}

impl<'a> Checker<'a> {
    fn show(&self, ty: &Type) -> String {
        ty.display(self.types).to_string()
    }

    fn declare_function(&mut self, f: &Function) -> Result<(), TypeError> {
        if self.func_names.contains_key(&f.name) {
            return Err(TypeError::new(
                f.pos,
                format!("function `{}` redeclared", f.name),
            ));
        }
        let ret = resolve_type(self.types, &f.ret, f.pos)?;
        if !(ret == Type::Void || ret.is_scalar()) {
            return Err(TypeError::new(
                f.pos,
                "functions may only return void, int, char or pointers",
            ));
        }
        let mut params = Vec::new();
        for p in &f.params {
            let ty = resolve_type(self.types, &p.ty, p.pos)?;
            if !ty.is_scalar() {
                return Err(TypeError::new(
                    p.pos,
                    "parameters must be int, char or pointers; pass structs by address",
                ));
            }
            params.push(ty);
        }
        let id = FuncId(self.signatures.len() as u32);
        self.signatures.push(Signature { params, ret });
        self.func_names.insert(f.name.clone(), id);
        Ok(())
    }

    fn declare_global(&mut self, g: &VarDecl) -> Result<(), TypeError> {
        if self.global_names.contains_key(&g.name) || self.func_names.contains_key(&g.name) {
            return Err(TypeError::new(g.pos, format!("`{}` redeclared", g.name)));
        }
        let ty = resolve_type(self.types, &g.ty, g.pos)?;
        if ty == Type::Void {
            return Err(TypeError::new(g.pos, "variable cannot have type void"));
        }
        let mut scope = Scope {
            locals: Vec::new(),
            frames: vec![HashMap::new()],
            ret: Type::Void,
            in_function: false,
        };
        let init = match &g.init {
            Some(e) => {
                let e = self.expr(&mut scope, e)?;
                Some(self.coerce(&ty, e)?)
            }
            None => None,
        };
        if init.is_some() && !ty.is_scalar() {
            return Err(TypeError::new(
                g.pos,
                "only scalar variables can have initializers",
            ));
        }
        self.global_names
            .insert(g.name.clone(), self.globals.len() as u32);
        self.globals.push(GlobalVar {
            name: g.name.clone(),
            ty,
            init,
            pos: g.pos,
        });
        Ok(())
    }

    fn function(&mut self, f: &Function) -> Result<TFunction, TypeError> {
        let id = self.func_names[&f.name];
        let sig = &self.signatures[id.0 as usize];
        let ret = sig.ret.clone();
        let mut scope = Scope {
            locals: Vec::new(),
            frames: vec![HashMap::new()],
            ret: ret.clone(),
            in_function: true,
        };
        for (p, ty) in f.params.iter().zip(sig.params.clone()) {
            if scope.frames[0].contains_key(&p.name) {
                return Err(TypeError::new(
                    p.pos,
                    format!("duplicate parameter `{}`", p.name),
                ));
            }
            scope.frames[0].insert(p.name.clone(), scope.locals.len() as u32);
            scope.locals.push(LocalVar {
                name: p.name.clone(),
                ty,
                pos: p.pos,
                is_param: true,
            });
        }
        let param_count = scope.locals.len();
        let mut body = Vec::new();
        for s in &f.body {
            body.push(self.stmt(&mut scope, s)?);
        }
        Ok(TFunction {
            name: f.name.clone(),
            ret,
            param_count,
            locals: scope.locals,
            body,
            pos: f.pos,
        })
    }

    fn stmt(&mut self, scope: &mut Scope, s: &Stmt) -> Result<TStmt, TypeError> {
        let kind = match &s.kind {
            StmtKind::Decl(d) => {
                let frame = scope.frames.last().expect("scope frame");
                if frame.contains_key(&d.name) {
                    return Err(TypeError::new(
                        d.pos,
                        format!("`{}` redeclared in this scope", d.name),
                    ));
                }
                let ty = resolve_type(self.types, &d.ty, d.pos)?;
                if ty == Type::Void {
                    return Err(TypeError::new(d.pos, "variable cannot have type void"));
                }
                let init = match &d.init {
                    Some(e) => {
                        if !ty.is_scalar() {
                            return Err(TypeError::new(
                                d.pos,
                                "only scalar variables can have initializers",
                            ));
                        }
                        let e = self.expr(scope, e)?;
                        Some(self.coerce(&ty, e)?)
                    }
                    None => None,
                };
                let id = scope.locals.len() as u32;
                scope.locals.push(LocalVar {
                    name: d.name.clone(),
                    ty,
                    pos: d.pos,
                    is_param: false,
                });
                scope
                    .frames
                    .last_mut()
                    .expect("scope frame")
                    .insert(d.name.clone(), id);
                TStmtKind::Decl(id, init)
            }
            StmtKind::Assign(lhs, rhs) => {
                let lhs = self.expr(scope, lhs)?;
                if !lhs.is_lvalue() {
                    return Err(TypeError::new(
                        lhs.pos,
                        "left side of assignment is not an lvalue",
                    ));
                }
                if !lhs.ty.is_scalar() {
                    return Err(TypeError::new(
                        lhs.pos,
                        format!("cannot assign to a value of type {}", self.show(&lhs.ty)),
                    ));
                }
                let rhs = self.expr(scope, rhs)?;
                let rhs = self.coerce(&lhs.ty, rhs)?;
                TStmtKind::Assign(lhs, rhs)
            }
            StmtKind::Block(body) => {
                scope.frames.push(HashMap::new());
                let mut out = Vec::new();
                for b in body {
                    out.push(self.stmt(scope, b)?);
                }
                scope.frames.pop();
                TStmtKind::Block(out)
            }
            StmtKind::If(c, t, e) => {
                let c = self.condition(scope, c)?;
                let t = Box::new(self.nested(scope, t)?);
                let e = match e {
                    Some(e) => Some(Box::new(self.nested(scope, e)?)),
                    None => None,
                };
                TStmtKind::If(c, t, e)
            }
            StmtKind::While(c, b) => {
                let c = self.condition(scope, c)?;
                TStmtKind::While(c, Box::new(self.nested(scope, b)?))
            }
            StmtKind::Expr(e) => {
                let e = self.expr(scope, e)?;
                if !matches!(e.kind, TExprKind::Call(..)) {
                    return Err(TypeError::new(e.pos, "expression statement must be a call"));
                }
                TStmtKind::Call(e)
            }
            StmtKind::Return(value) => {
                let ret = scope.ret.clone();
                match (value, &ret) {
                    (None, Type::Void) => TStmtKind::Return(None),
                    (None, _) => return Err(TypeError::new(s.pos, "missing return value")),
                    (Some(v), Type::Void) => {
                        return Err(TypeError::new(v.pos, "void function cannot return a value"))
                    }
                    (Some(v), _) => {
                        let v = self.expr(scope, v)?;
                        TStmtKind::Return(Some(self.coerce(&ret, v)?))
                    }
                }
            }
            StmtKind::Free(e) => {
                let e = self.rvalue(scope, e)?;
                if !e.ty.is_pointer() {
                    return Err(TypeError::new(
                        e.pos,
                        format!("free expects a pointer, found {}", self.show(&e.ty)),
                    ));
                }
                TStmtKind::Free(e)
            }
            StmtKind::Print(e) => {
                let e = self.rvalue(scope, e)?;
                if !e.ty.is_integral() {
                    return Err(TypeError::new(
                        e.pos,
                        format!("print expects int or char, found {}", self.show(&e.ty)),
                    ));
                }
                TStmtKind::Print(e)
            }
        };
        Ok(TStmt { kind, pos: s.pos })
    }

    /// Branch bodies get their own scope even without braces.
    fn nested(&mut self, scope: &mut Scope, s: &Stmt) -> Result<TStmt, TypeError> {
        scope.frames.push(HashMap::new());
        let out = self.stmt(scope, s);
        scope.frames.pop();
        out
    }

    fn condition(&mut self, scope: &mut Scope, e: &Expr) -> Result<TExpr, TypeError> {
        let e = self.rvalue(scope, e)?;
        if !e.ty.is_integral() {
            return Err(TypeError::new(
                e.pos,
                format!("condition must be int or char, found {}", self.show(&e.ty)),
            ));
        }
        Ok(e)
    }

    /// Converts `value` for storage into a `target`-typed location.
    fn coerce(&self, target: &Type, value: TExpr) -> Result<TExpr, TypeError> {
        if !value.ty.is_scalar() {
            return Err(TypeError::new(
                value.pos,
                format!("a value of type {} cannot be copied", self.show(&value.ty)),
            ));
        }
        if *target == value.ty {
            return Ok(value);
        }
        match (target, &value.ty) {
            (Type::Char, Type::Int) => Ok(TExpr {
                pos: value.pos,
                ty: Type::Char,
                kind: TExprKind::Narrow(Box::new(value)),
            }),
            (Type::Int, Type::Char) if matches!(value.kind, TExprKind::Const(_)) => Ok(TExpr {
                ty: Type::Int,
                ..value
            }),
            (Type::Int, Type::Char) => Ok(TExpr {
                pos: value.pos,
                ty: Type::Int,
                kind: TExprKind::Widen(Box::new(value)),
            }),
            (Type::Pointer(_), Type::Int) if value.kind == TExprKind::Const(0) => Ok(TExpr {
                kind: TExprKind::Null,
                ty: target.clone(),
                pos: value.pos,
            }),
            _ => Err(TypeError::new(
                value.pos,
                format!(
                    "type mismatch: cannot use {} where {} is expected",
                    self.show(&value.ty),
                    self.show(target)
                ),
            )),
        }
    }

    fn rvalue(&mut self, scope: &mut Scope, e: &Expr) -> Result<TExpr, TypeError> {
        let e = self.expr(scope, e)?;
        if !e.ty.is_scalar() {
            return Err(TypeError::new(
                e.pos,
                format!("expected a scalar value, found {}", self.show(&e.ty)),
            ));
        }
        Ok(e)
    }

    fn struct_member(&self, ty: &Type, field: &str, pos: Pos) -> Result<(usize, Type), TypeError> {
        let Type::Struct(id) = ty else {
            return Err(TypeError::new(
                pos,
                format!("member access on non-struct type {}", self.show(ty)),
            ));
        };
        let def = self.types.get(*id);
        let idx = def.field_index(field).ok_or_else(|| {
            TypeError::new(pos, format!("struct {} has no field `{field}`", def.name))
        })?;
        Ok((idx, def.fields[idx].ty.clone()))
    }

    fn expr(&mut self, scope: &mut Scope, e: &Expr) -> Result<TExpr, TypeError> {
        let pos = e.pos;
        let (kind, ty) = match &e.kind {
            ExprKind::IntLit(v) => (TExprKind::Const(*v), Type::Int),
            ExprKind::CharLit(c) => (TExprKind::Const(*c as i8 as i64), Type::Char),
            ExprKind::Var(name) => {
                if let Some(id) = scope.lookup(name) {
                    (
                        TExprKind::Var(VarRef::Local(id)),
                        scope.locals[id as usize].ty.clone(),
                    )
                } else if let Some(&g) = self.global_names.get(name) {
                    (
                        TExprKind::Var(VarRef::Global(g)),
                        self.globals[g as usize].ty.clone(),
                    )
                } else {
                    return Err(TypeError::new(
                        pos,
                        format!("undeclared identifier `{name}`"),
                    ));
                }
            }
            ExprKind::Field(base, field) => {
                let base = self.expr(scope, base)?;
                if !base.is_lvalue() {
                    return Err(TypeError::new(pos, "member access requires an lvalue"));
                }
                let (idx, ty) = self.struct_member(&base.ty, field, pos)?;
                (TExprKind::Field(Box::new(base), idx), ty)
            }
            ExprKind::Arrow(base, field) => {
                let base = self.rvalue(scope, base)?;
                let pointee = base.ty.pointee().cloned().ok_or_else(|| {
                    TypeError::new(
                        pos,
                        format!("`->` on non-pointer type {}", self.show(&base.ty)),
                    )
                })?;
                let (idx, ty) = self.struct_member(&pointee, field, pos)?;
                (TExprKind::Arrow(Box::new(base), idx), ty)
            }
            ExprKind::Index(base, index) => {
                let base = self.expr(scope, base)?;
                let elem = match &base.ty {
                    Type::Array(elem, _) => (**elem).clone(),
                    Type::Pointer(elem) => (**elem).clone(),
                    other => {
                        return Err(TypeError::new(
                            pos,
                            format!("cannot index a value of type {}", self.show(other)),
                        ))
                    }
                };
                let index = self.rvalue(scope, index)?;
                if !index.ty.is_integral() {
                    return Err(TypeError::new(index.pos, "array index must be int or char"));
                }
                (TExprKind::Index(Box::new(base), Box::new(index)), elem)
            }
            ExprKind::AddrOf(inner) => {
                let inner = self.expr(scope, inner)?;
                if !inner.is_lvalue() {
                    return Err(TypeError::new(
                        pos,
                        "cannot take the address of a non-lvalue",
                    ));
                }
                let ty = Type::pointer_to(inner.ty.clone());
                (TExprKind::AddrOf(Box::new(inner)), ty)
            }
            ExprKind::Deref(inner) => {
                let inner = self.rvalue(scope, inner)?;
                let ty = inner.ty.pointee().cloned().ok_or_else(|| {
                    TypeError::new(
                        pos,
                        format!("cannot dereference type {}", self.show(&inner.ty)),
                    )
                })?;
                (TExprKind::Deref(Box::new(inner)), ty)
            }
            ExprKind::Neg(inner) => {
                let inner = self.rvalue(scope, inner)?;
                if !inner.ty.is_integral() {
                    return Err(TypeError::new(pos, "negation requires int or char"));
                }
                (TExprKind::Neg(Box::new(inner)), Type::Int)
            }
            ExprKind::Binary(op, l, r) => {
                let l = self.rvalue(scope, l)?;
                let r = self.rvalue(scope, r)?;
                if l.ty.is_integral() && r.ty.is_integral() {
                    (TExprKind::Binary(*op, Box::new(l), Box::new(r)), Type::Int)
                } else if matches!(op, BinOp::Eq | BinOp::Ne) {
                    let (l, r) = if l.ty.is_pointer() {
                        let r = self.coerce(&l.ty, r)?;
                        (l, r)
                    } else {
                        let l = self.coerce(&r.ty, l)?;
                        (l, r)
                    };
                    (TExprKind::Binary(*op, Box::new(l), Box::new(r)), Type::Int)
                } else {
                    return Err(TypeError::new(
                        pos,
                        format!(
                            "operator `{}` not defined for {} and {}; pointer arithmetic is limited to indexing",
                            op.symbol(),
                            self.show(&l.ty),
                            self.show(&r.ty)
                        ),
                    ));
                }
            }
            ExprKind::Call(name, args) => {
                if !scope.in_function {
                    return Err(TypeError::new(
                        pos,
                        "calls are not allowed in global initializers",
                    ));
                }
                let id = *self
                    .func_names
                    .get(name)
                    .ok_or_else(|| TypeError::new(pos, format!("undeclared function `{name}`")))?;
                let (params, ret) = {
                    let sig = &self.signatures[id.0 as usize];
                    (sig.params.clone(), sig.ret.clone())
                };
                if params.len() != args.len() {
                    return Err(TypeError::new(
                        pos,
                        format!(
                            "`{name}` expects {} argument(s), found {}",
                            params.len(),
                            args.len()
                        ),
                    ));
                }
                let mut typed_args = Vec::new();
                for (a, p) in args.iter().zip(&params) {
                    let a = self.expr(scope, a)?;
                    typed_args.push(self.coerce(p, a)?);
                }
                (TExprKind::Call(id, typed_args), ret)
            }
            ExprKind::Malloc { ty, count } => {
                let elem = resolve_type(self.types, ty, pos)?;
                if elem == Type::Void {
                    return Err(TypeError::new(pos, "sizeof(void) is not allowed"));
                }
                let count = match count {
                    Some(c) => {
                        let c = self.rvalue(scope, c)?;
                        if !c.ty.is_integral() {
                            return Err(TypeError::new(c.pos, "allocation count must be int"));
                        }
                        Some(Box::new(c))
                    }
                    None => None,
                };
                let ty = Type::pointer_to(elem.clone());
                (TExprKind::Malloc { elem, count }, ty)
            }
        };
        if ty == Type::Void && !matches!(kind, TExprKind::Call(..)) {
            return Err(TypeError::new(pos, "expression has type void"));
        }
        Ok(TExpr { kind, ty, pos })
    }
}
