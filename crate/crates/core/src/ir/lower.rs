// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

use crate::frontend::ast::Pos;
use crate::frontend::compute_layout;
use crate::frontend::typed::*;
use crate::frontend::{Type, TypeTable};

use super::*;

/// Lowers a type-checked program.
///
/// Sites are numbered in lowering order: global initializers first, then
/// each function in declaration order, statements left to right.
pub fn lower(prog: &TypedProgram) -> Result<IrProgram, LoweringError> {
    let mut ctx = Ctx {
        types: &prog.types,
        prog,
        alloc_sites: Vec::new(),
        global_sites: Vec::new(),
        next_def: 1,
        next_use: 0,
    };

    for g in &prog.globals {
        let site = ctx.new_alloc_site(AllocKind::Global, &g.ty, &g.name, "@init", g.pos)?;
        ctx.global_sites.push(site);
    }

    let init = ctx.init_function()?;
    let mut functions = Vec::new();
    for (i, f) in prog.functions.iter().enumerate() {
        functions.push(ctx.function(i, f)?);
    }
    functions.push(init);

    Ok(IrProgram {
        types: prog.types.clone(),
        alloc_sites: ctx.alloc_sites,
        global_sites: ctx.global_sites,
        main: FuncIdx(prog.main.0),
        init: FuncIdx(functions.len() as u32 - 1),
        functions,
        def_count: ctx.next_def - 1,
        use_count: ctx.next_use,
    })
}

struct Ctx<'a> {
    types: &'a TypeTable,
    prog: &'a TypedProgram,
    alloc_sites: Vec<AllocSite>,
    global_sites: Vec<AllocSiteId>,
    next_def: u32,
    next_use: u32,
}

impl<'a> Ctx<'a> {
    fn new_alloc_site(
        &mut self,
        kind: AllocKind,
        ty: &Type,
        name: &str,
        function: &str,
        pos: Pos,
    ) -> Result<AllocSiteId, LoweringError> {
        let layout = compute_layout(self.types, ty).map_err(|e| LoweringError {
            pos,
            message: e.to_string(),
        })?;
        let id = AllocSiteId(self.alloc_sites.len() as u32);
        self.alloc_sites.push(AllocSite {
            id,
            kind,
            ty: ty.clone(),
            layout,
            name: name.to_string(),
            function: function.to_string(),
            pos,
        });
        Ok(id)
    }

    fn init_function(&mut self) -> Result<IrFunction, LoweringError> {
        let prog = self.prog;
        let mut b = Builder::new(self, None, "@init", Type::Void, &[]);
        let mut addrs = Vec::new();
        for (g, site) in prog.globals.iter().zip(b.ctx.global_sites.clone()) {
            let dest = b.reg(Type::pointer_to(g.ty.clone()));
            b.emit(Inst::Alloc {
                dest,
                site,
                count: None,
            });
            addrs.push(dest);
        }
        for (g, addr) in prog.globals.iter().zip(addrs) {
            if let Some(init) = &g.init {
                let value = b.rvalue(init)?;
                b.store(addr, value, &g.ty, g.pos, g.name.clone());
            }
        }
        b.terminate(Terminator::Ret(None));
        Ok(b.finish())
    }

    fn function(&mut self, index: usize, f: &TFunction) -> Result<IrFunction, LoweringError> {
        let params: Vec<Type> = f.locals[..f.param_count]
            .iter()
            .map(|l| l.ty.clone())
            .collect();
        let mut b = Builder::new(self, Some(index), &f.name, f.ret.clone(), &params);
        for local in &f.locals {
            let site = b.ctx.new_alloc_site(
                AllocKind::Stack,
                &local.ty,
                &local.name,
                &f.name,
                local.pos,
            )?;
            let dest = b.reg(Type::pointer_to(local.ty.clone()));
            b.emit(Inst::Alloc {
                dest,
                site,
                count: None,
            });
            b.locals.push(dest);
        }
        for (i, local) in f.locals[..f.param_count].iter().enumerate() {
            let addr = b.locals[i];
            let value = b.params[i];
            b.store(addr, value, &local.ty, local.pos, local.name.clone());
        }
        for s in &f.body {
            b.stmt(s)?;
        }
        if f.ret == Type::Void {
            b.terminate(Terminator::Ret(None));
        } else {
            let zero = b.constant(f.ret.clone(), 0);
            b.terminate(Terminator::Ret(Some(zero)));
        }
        Ok(b.finish())
    }
}

struct Builder<'c, 'a> {
    ctx: &'c mut Ctx<'a>,
    name: String,
    ret: Type,
    params: Vec<Reg>,
    reg_types: Vec<Type>,
    blocks: Vec<Block>,
    current: usize,
    /// Address register of every local, indexed by local id.
    locals: Vec<Reg>,
    /// Index of the source function; `None` for the global initializer.
    func: Option<usize>,
}

impl<'c, 'a> Builder<'c, 'a> {
    fn new(
        ctx: &'c mut Ctx<'a>,
        func: Option<usize>,
        name: &str,
        ret: Type,
        params: &[Type],
    ) -> Self {
        let mut b = Builder {
            ctx,
            name: name.to_string(),
            ret,
            params: Vec::new(),
            reg_types: Vec::new(),
            blocks: vec![Block {
                insts: Vec::new(),
                term: Terminator::Ret(None),
            }],
            current: 0,
            locals: Vec::new(),
            func,
        };
        for ty in params {
            let r = b.reg(ty.clone());
            b.params.push(r);
        }
        b
    }

    fn finish(self) -> IrFunction {
        IrFunction {
            name: self.name,
            params: self.params,
            ret: self.ret,
            reg_types: self.reg_types,
            blocks: self.blocks,
        }
    }

    fn reg(&mut self, ty: Type) -> Reg {
        self.reg_types.push(ty);
        Reg(self.reg_types.len() as u32 - 1)
    }

    fn emit(&mut self, inst: Inst) {
        self.blocks[self.current].insts.push(inst);
    }

    fn new_block(&mut self) -> BlockId {
        self.blocks.push(Block {
            insts: Vec::new(),
            term: Terminator::Ret(None),
        });
        BlockId(self.blocks.len() as u32 - 1)
    }

    /// Sets the terminator of the current block.
    fn terminate(&mut self, term: Terminator) {
        self.blocks[self.current].term = term;
    }

    fn switch_to(&mut self, block: BlockId) {
        self.current = block.0 as usize;
    }

    fn constant(&mut self, ty: Type, value: i64) -> Reg {
        let dest = self.reg(ty);
        self.emit(Inst::Const { dest, value });
        dest
    }

    fn store(&mut self, addr: Reg, value: Reg, ty: &Type, pos: Pos, target: String) {
        let site = DefSiteId(self.ctx.next_def);
        self.ctx.next_def += 1;
        self.emit(Inst::Store {
            addr,
            value,
            width: ty
                .scalar_size()
                .expect("typecheck admits scalar stores only"),
            site,
            pos,
            target,
        });
    }

    fn stmt(&mut self, s: &TStmt) -> Result<(), LoweringError> {
        match &s.kind {
            TStmtKind::Decl(id, init) => {
                if let Some(init) = init {
                    let addr = self.locals[*id as usize];
                    let value = self.rvalue(init)?;
                    let local = self.local(*id);
                    self.store(addr, value, &local.ty, s.pos, local.name.clone());
                }
            }
            TStmtKind::Assign(lhs, rhs) => {
                let addr = self.address(lhs)?;
                let value = self.rvalue(rhs)?;
                self.store(addr, value, &lhs.ty, s.pos, self.describe(lhs));
            }
            TStmtKind::Block(body) => {
                for b in body {
                    self.stmt(b)?;
                }
            }
            TStmtKind::If(cond, then, els) => {
                let c = self.rvalue(cond)?;
                let then_bb = self.new_block();
                let else_bb = self.new_block();
                let join = if els.is_some() {
                    self.new_block()
                } else {
                    else_bb
                };
                self.terminate(Terminator::Branch {
                    cond: c,
                    then_bb,
                    else_bb,
                });
                self.switch_to(then_bb);
                self.stmt(then)?;
                self.terminate(Terminator::Jump(join));
                if let Some(els) = els {
                    self.switch_to(else_bb);
                    self.stmt(els)?;
                    self.terminate(Terminator::Jump(join));
                }
                self.switch_to(join);
            }
            TStmtKind::While(cond, body) => {
                let head = self.new_block();
                self.terminate(Terminator::Jump(head));
                self.switch_to(head);
                let c = self.rvalue(cond)?;
                let body_bb = self.new_block();
                let exit = self.new_block();
                self.terminate(Terminator::Branch {
                    cond: c,
                    then_bb: body_bb,
                    else_bb: exit,
                });
                self.switch_to(body_bb);
                self.stmt(body)?;
                self.terminate(Terminator::Jump(head));
                self.switch_to(exit);
            }
            TStmtKind::Call(call) => {
                self.rvalue(call)?;
            }
            TStmtKind::Return(value) => {
                let r = match value {
                    Some(v) => Some(self.rvalue(v)?),
                    None => None,
                };
                self.terminate(Terminator::Ret(r));
                let dead = self.new_block();
                self.switch_to(dead);
            }
            TStmtKind::Free(e) => {
                let addr = self.rvalue(e)?;
                self.emit(Inst::Free { addr, pos: s.pos });
            }
            TStmtKind::Print(e) => {
                let value = self.rvalue(e)?;
                self.emit(Inst::Print { value });
            }
        }
        Ok(())
    }

    fn local(&self, id: u32) -> &'a LocalVar {
        let prog: &'a TypedProgram = self.ctx.prog;
        let func = self.func.expect("locals only exist inside functions");
        &prog.functions[func].locals[id as usize]
    }

    /// Source-like rendering of an lvalue for site catalogs.
    fn describe(&self, e: &TExpr) -> String {
        match &e.kind {
            TExprKind::Var(VarRef::Local(id)) => self.local(*id).name.clone(),
            TExprKind::Var(VarRef::Global(g)) => self.ctx.prog.globals[*g as usize].name.clone(),
            TExprKind::Field(base, idx) => {
                format!(
                    "{}.{}",
                    self.describe(base),
                    self.field_name(&base.ty, *idx)
                )
            }
            TExprKind::Arrow(base, idx) => {
                let pointee = base.ty.pointee().expect("arrow on pointer");
                format!(
                    "{}->{}",
                    self.describe(base),
                    self.field_name(pointee, *idx)
                )
            }
            TExprKind::Index(base, _) => format!("{}[...]", self.describe(base)),
            TExprKind::Deref(inner) => format!("*{}", self.describe(inner)),
            TExprKind::Call(f, _) => format!("{}(...)", self.ctx.prog.function(*f).name),
            TExprKind::AddrOf(inner) => format!("&{}", self.describe(inner)),
            _ => "(...)".to_string(),
        }
    }

    fn field_name(&self, ty: &Type, idx: usize) -> String {
        match ty {
            Type::Struct(id) => self.ctx.types.get(*id).fields[idx].name.clone(),
            _ => unreachable!("field access on non-struct"),
        }
    }

    /// Address of an lvalue, as a pointer-typed register.
    fn address(&mut self, e: &TExpr) -> Result<Reg, LoweringError> {
        let ptr_ty = Type::pointer_to(e.ty.clone());
        match &e.kind {
            TExprKind::Var(VarRef::Local(id)) => Ok(self.locals[*id as usize]),
            TExprKind::Var(VarRef::Global(g)) => {
                let dest = self.reg(ptr_ty);
                self.emit(Inst::AddrOf { dest, global: *g });
                Ok(dest)
            }
            TExprKind::Field(base, idx) => {
                let base_addr = self.address(base)?;
                Ok(self.field_addr(base_addr, &base.ty, *idx, ptr_ty))
            }
            TExprKind::Arrow(base, idx) => {
                let base_ptr = self.rvalue(base)?;
                let pointee = base.ty.pointee().expect("arrow on pointer").clone();
                Ok(self.field_addr(base_ptr, &pointee, *idx, ptr_ty))
            }
            TExprKind::Index(base, index) => {
                let base_addr = if matches!(base.ty, Type::Array(..)) {
                    self.address(base)?
                } else {
                    self.rvalue(base)?
                };
                let index = self.rvalue(index)?;
                let elem_size = compute_layout(self.ctx.types, &e.ty)
                    .map_err(|err| LoweringError {
                        pos: e.pos,
                        message: err.to_string(),
                    })?
                    .size;
                let dest = self.reg(ptr_ty);
                self.emit(Inst::IndexAddr {
                    dest,
                    base: base_addr,
                    index,
                    elem_size,
                });
                Ok(dest)
            }
            TExprKind::Deref(inner) => self.rvalue(inner),
            _ => Err(LoweringError {
                pos: e.pos,
                message: "expression is not an lvalue".into(),
            }),
        }
    }

    fn field_addr(&mut self, base: Reg, struct_ty: &Type, idx: usize, ptr_ty: Type) -> Reg {
        let Type::Struct(sid) = struct_ty else {
            unreachable!("field access on non-struct")
        };
        let layout = self.ctx.prog.struct_layout(*sid);
        let field = &layout.fields[idx];
        let dest = self.reg(ptr_ty);
        let inst = Inst::FieldAddr {
            dest,
            base,
            offset: field.offset,
            field: field.name.clone(),
        };
        self.emit(inst);
        dest
    }

    fn rvalue(&mut self, e: &TExpr) -> Result<Reg, LoweringError> {
        match &e.kind {
            TExprKind::Const(v) => Ok(self.constant(e.ty.clone(), *v)),
            TExprKind::Null => Ok(self.constant(e.ty.clone(), 0)),
            TExprKind::Var(_)
            | TExprKind::Field(..)
            | TExprKind::Arrow(..)
            | TExprKind::Index(..)
            | TExprKind::Deref(_) => {
                let addr = self.address(e)?;
                let dest = self.reg(e.ty.clone());
                let site = UseSiteId(self.ctx.next_use);
                self.ctx.next_use += 1;
                let width = e.ty.scalar_size().ok_or_else(|| LoweringError {
                    pos: e.pos,
                    message: "aggregate used as a value".into(),
                })?;
                let target = self.describe(e);
                self.emit(Inst::Load {
                    dest,
                    addr,
                    width,
                    site,
                    pos: e.pos,
                    target,
                });
                Ok(dest)
            }
            TExprKind::AddrOf(inner) => self.address(inner),
            TExprKind::Neg(inner) => {
                let src = self.rvalue(inner)?;
                let dest = self.reg(Type::Int);
                self.emit(Inst::Neg { dest, src });
                Ok(dest)
            }
            TExprKind::Narrow(inner) => {
                let src = self.rvalue(inner)?;
                let dest = self.reg(Type::Char);
                self.emit(Inst::Narrow { dest, src });
                Ok(dest)
            }
            // Char registers already hold the sign-extended value.
            TExprKind::Widen(inner) => self.rvalue(inner),
            TExprKind::Binary(op, l, r) => {
                let lhs = self.rvalue(l)?;
                let rhs = self.rvalue(r)?;
                let dest = self.reg(Type::Int);
                self.emit(Inst::Binary {
                    dest,
                    op: *op,
                    lhs,
                    rhs,
                });
                Ok(dest)
            }
            TExprKind::Call(f, args) => {
                let mut regs = Vec::with_capacity(args.len());
                for a in args {
                    regs.push(self.rvalue(a)?);
                }
                let dest = if e.ty == Type::Void {
                    None
                } else {
                    Some(self.reg(e.ty.clone()))
                };
                self.emit(Inst::Call {
                    dest,
                    func: FuncIdx(f.0),
                    args: regs,
                });
                // Void calls only appear as statements; the register is unused.
                Ok(dest.unwrap_or(Reg(u32::MAX)))
            }
            TExprKind::Malloc { elem, count } => {
                let count = match count {
                    Some(c) => Some(self.rvalue(c)?),
                    None => None,
                };
                let name = self.name.clone();
                let site =
                    self.ctx
                        .new_alloc_site(AllocKind::Heap, elem, "malloc", &name, e.pos)?;
                let dest = self.reg(e.ty.clone());
                self.emit(Inst::Alloc { dest, site, count });
                Ok(dest)
            }
        }
    }
}
