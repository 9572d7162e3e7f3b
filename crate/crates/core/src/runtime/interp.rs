// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

use std::sync::Arc;

use crate::frontend::ast::{BinOp, Pos};
use crate::frontend::{Type, TypeLayout};
use crate::ir::{
    AllocKind, AllocSiteId, DefSiteId, FuncIdx, Inst, IrFunction, IrProgram, Reg, Terminator,
    UseSiteId,
};
use crate::vfa::{Analysis, CompressedTable};

use super::memory::{init_memory, MemoryImage, Release, ResolvedSlot};
use super::shadow::{check_use, observed_def, record_def, SlotViolation};
use super::{
    Counters, ExecutionReport, FaultDetail, FaultKind, Mode, Outcome, RunConfig, RunError,
    ViolationDetail,
};

/// Callbacks fired as the interpreter touches memory. Every callback sees the
/// memory image after the event took effect.
pub trait Observer {
    fn on_alloc(&mut self, _mem: &MemoryImage, _base: u64, _site: AllocSiteId) {}
    fn on_free(&mut self, _mem: &MemoryImage, _base: u64) {}
    fn on_store(&mut self, _mem: &MemoryImage, _addr: u64, _width: u32, _def: DefSiteId) {}
    /// `observed` lists the last writer of each slot read; empty in baseline
    /// mode.
    fn on_load(
        &mut self,
        _mem: &MemoryImage,
        _addr: u64,
        _width: u32,
        _use_site: UseSiteId,
        _observed: &[DefSiteId],
    ) {
    }
    fn on_field_addr(&mut self, _mem: &MemoryImage, _base: u64, _offset: u32, _result: u64) {}
}

pub struct NoObserver;

impl Observer for NoObserver {}

/// Legal-def table a mode checks against, or `None` for baseline.
pub fn tables_for(analysis: &Analysis, mode: Mode, strict_init: bool) -> Option<CompressedTable> {
    let table = match mode {
        Mode::Baseline => return None,
        Mode::Protected => &analysis.compressed,
        Mode::FieldInsensitive => &analysis.compressed_insensitive,
    };
    Some(if strict_init {
        table.without_initial()
    } else {
        table.clone()
    })
}

/// Runs the global initializer and then `main` with `input` bound to its
/// parameters.
pub fn interpret(
    prog: &IrProgram,
    tables: Option<&CompressedTable>,
    config: &RunConfig,
    input: &[i64],
    observer: &mut dyn Observer,
) -> Result<ExecutionReport, RunError> {
    let program_hash = prog.content_hash();
    let table = if config.mode.is_checked() {
        let t = tables.ok_or(RunError::MissingTables(config.mode))?;
        if t.program_hash != program_hash {
            return Err(RunError::TableMismatch {
                expected: program_hash,
                found: t.program_hash.clone(),
            });
        }
        if t.strict_init != config.strict_init {
            return Err(RunError::StrictMismatch(t.strict_init));
        }
        Some(t)
    } else {
        None
    };
    let main = prog.function(prog.main);
    if main.params.len() != input.len() {
        return Err(RunError::InputArity {
            expected: main.params.len(),
            got: input.len(),
        });
    }
    let args: Vec<i64> = main
        .params
        .iter()
        .zip(input)
        .map(|(r, v)| fit(main, *r, *v))
        .collect();

    let mut m = Machine::new(prog, table, *config, observer)?;
    let stop = m
        .run(prog.init, &[])
        .and_then(|()| m.run(prog.main, &args))
        .err();
    let outcome = match &stop {
        Some(Stop::Fault(_)) => Outcome::MemoryFault,
        Some(Stop::Limit(_)) => Outcome::ResourceLimit,
        Some(Stop::Violation) => Outcome::Violation,
        None if !m.violations.is_empty() => Outcome::Violation,
        None => Outcome::Completed,
    };
    let (fault, limit) = match stop {
        Some(Stop::Fault(f)) => (Some(f), None),
        Some(Stop::Limit(l)) => (None, Some(l)),
        _ => (None, None),
    };
    let mut counters = m.counters;
    counters.peak_live_slots = m.mem.peak_live_slots();
    counters.peak_live_bytes = m.mem.peak_live_bytes();
    counters.program_bytes = m.mem.peak_live_bytes();
    if config.mode.is_checked() {
        counters.metadata_bytes = 4 * m.mem.peak_live_slots();
        counters.per_byte_shadow_bytes = 4 * m.mem.peak_live_bytes();
    }
    Ok(ExecutionReport {
        program_hash,
        mode: config.mode,
        strict_init: config.strict_init,
        outcome,
        violation: m.violations.first().cloned(),
        violations: m.violations,
        fault,
        limit,
        counters,
        output: m.output,
    })
}

enum Stop {
    Violation,
    Fault(FaultDetail),
    Limit(String),
}

struct Frame {
    func: FuncIdx,
    regs: Vec<i64>,
    block: usize,
    inst: usize,
    ret_dest: Option<Reg>,
    /// Stack objects to release on return, in allocation order.
    locals: Vec<u64>,
}

struct Machine<'p, 'o> {
    prog: &'p IrProgram,
    table: Option<&'p CompressedTable>,
    config: RunConfig,
    mem: MemoryImage,
    layouts: Vec<Arc<TypeLayout>>,
    def_pos: Vec<Pos>,
    global_of_site: Vec<Option<usize>>,
    global_addrs: Vec<u64>,
    frames: Vec<Frame>,
    counters: Counters,
    output: Vec<i64>,
    violations: Vec<ViolationDetail>,
    observer: &'o mut dyn Observer,
}

fn fit(func: &IrFunction, r: Reg, v: i64) -> i64 {
    match func.reg_type(r) {
        Some(Type::Char) => v as i8 as i64,
        Some(Type::Int) => v as i32 as i64,
        _ => v,
    }
}

impl<'p, 'o> Machine<'p, 'o> {
    fn new(
        prog: &'p IrProgram,
        table: Option<&'p CompressedTable>,
        config: RunConfig,
        observer: &'o mut dyn Observer,
    ) -> Result<Self, RunError> {
        let mut def_pos = vec![Pos::default(); prog.def_count as usize];
        for func in &prog.functions {
            for inst in func.insts() {
                if let Inst::Store { site, pos, .. } = inst {
                    def_pos[site.0 as usize - 1] = *pos;
                }
            }
        }
        let mut global_of_site = vec![None; prog.alloc_sites.len()];
        for (g, site) in prog.global_sites.iter().enumerate() {
            global_of_site[site.0 as usize] = Some(g);
        }
        Ok(Machine {
            prog,
            table,
            config,
            mem: init_memory(config.arena)?,
            layouts: prog
                .alloc_sites
                .iter()
                .map(|s| Arc::new(s.layout.clone()))
                .collect(),
            def_pos,
            global_of_site,
            global_addrs: vec![0; prog.global_sites.len()],
            frames: Vec::new(),
            counters: Counters::default(),
            output: Vec::new(),
            violations: Vec::new(),
            observer,
        })
    }

    fn run(&mut self, func: FuncIdx, args: &[i64]) -> Result<(), Stop> {
        self.push_frame(func, args, None)?;
        while !self.frames.is_empty() {
            self.step()?;
        }
        Ok(())
    }

    fn push_frame(
        &mut self,
        func: FuncIdx,
        args: &[i64],
        ret_dest: Option<Reg>,
    ) -> Result<(), Stop> {
        if self.frames.len() >= self.config.max_call_depth {
            return Err(Stop::Limit(format!(
                "call depth exceeds {}",
                self.config.max_call_depth
            )));
        }
        let f = self.prog.function(func);
        let mut regs = vec![0; f.reg_types.len()];
        for (p, v) in f.params.iter().zip(args) {
            regs[p.0 as usize] = *v;
        }
        self.frames.push(Frame {
            func,
            regs,
            block: 0,
            inst: 0,
            ret_dest,
            locals: Vec::new(),
        });
        Ok(())
    }

    fn frame(&self) -> &Frame {
        self.frames.last().expect("a frame is active")
    }

    fn func(&self) -> &'p IrFunction {
        self.prog.function(self.frame().func)
    }

    fn get(&self, r: Reg) -> i64 {
        self.frame().regs[r.0 as usize]
    }

    fn set(&mut self, r: Reg, v: i64) {
        let v = fit(self.func(), r, v);
        self.frames.last_mut().expect("a frame is active").regs[r.0 as usize] = v;
    }

    fn tick(&mut self) -> Result<(), Stop> {
        if self.counters.instructions >= self.config.budget {
            return Err(Stop::Limit(format!(
                "instruction budget of {} exhausted",
                self.config.budget
            )));
        }
        self.counters.instructions += 1;
        Ok(())
    }

    fn fault(&self, kind: FaultKind, address: Option<u64>, message: String) -> Stop {
        Stop::Fault(FaultDetail {
            kind,
            address,
            function: self.func().name.clone(),
            message,
        })
    }

    fn resolve(
        &self,
        addr: u64,
        width: u32,
        target: &str,
        pos: Pos,
    ) -> Result<Vec<ResolvedSlot>, Stop> {
        self.mem.resolve_slots(addr, width).map_err(|u| {
            self.fault(
                FaultKind::Unmapped,
                Some(u.0),
                format!(
                    "access to {target} at {pos} touches unmapped address {:#x}",
                    u.0
                ),
            )
        })
    }

    fn step(&mut self) -> Result<(), Stop> {
        let prog = self.prog;
        let (block, index) = (self.frame().block, self.frame().inst);
        let func = self.func();
        let block = &func.blocks[block];
        self.tick()?;
        match block.insts.get(index) {
            Some(inst) => {
                self.frames.last_mut().expect("a frame is active").inst += 1;
                self.exec(prog, inst)
            }
            None => self.terminate(&block.term),
        }
    }

    fn jump(&mut self, target: usize) {
        let frame = self.frames.last_mut().expect("a frame is active");
        frame.block = target;
        frame.inst = 0;
    }

    fn terminate(&mut self, term: &Terminator) -> Result<(), Stop> {
        match term {
            Terminator::Jump(b) => self.jump(b.0 as usize),
            Terminator::Branch {
                cond,
                then_bb,
                else_bb,
            } => {
                let target = if self.get(*cond) != 0 {
                    then_bb
                } else {
                    else_bb
                };
                self.jump(target.0 as usize);
            }
            Terminator::Ret(value) => {
                let value = value.map(|r| self.get(r));
                let name = self.func().name.clone();
                let frame = self.frames.pop().expect("a frame is active");
                for base in frame.locals.iter().rev() {
                    self.mem
                        .deallocate(
                            *base,
                            Release::FrameExit {
                                function: name.clone(),
                            },
                        )
                        .expect("stack objects are live until their frame returns");
                    self.observer.on_free(&self.mem, *base);
                }
                if let (Some(dest), Some(v), false) =
                    (frame.ret_dest, value, self.frames.is_empty())
                {
                    self.set(dest, v);
                }
            }
        }
        Ok(())
    }

    fn exec(&mut self, prog: &'p IrProgram, inst: &'p Inst) -> Result<(), Stop> {
        match inst {
            Inst::Const { dest, value } => self.set(*dest, *value),
            Inst::Alloc { dest, site, count } => {
                let n = match count {
                    Some(c) => {
                        let n = self.get(*c);
                        if n < 0 {
                            return Err(self.fault(
                                FaultKind::NegativeSize,
                                None,
                                format!("malloc of {n} elements"),
                            ));
                        }
                        n as u64
                    }
                    None => 1,
                };
                let base = self
                    .mem
                    .allocate(self.layouts[site.0 as usize].clone(), n, *site)
                    .map_err(|e| Stop::Limit(e.to_string()))?;
                self.counters.allocations += 1;
                match prog.alloc_site(*site).kind {
                    AllocKind::Stack => self
                        .frames
                        .last_mut()
                        .expect("a frame is active")
                        .locals
                        .push(base),
                    AllocKind::Global => {
                        if let Some(g) = self.global_of_site[site.0 as usize] {
                            self.global_addrs[g] = base;
                        }
                    }
                    AllocKind::Heap => {}
                }
                self.observer.on_alloc(&self.mem, base, *site);
                self.set(*dest, base as i64);
            }
            Inst::AddrOf { dest, global } => {
                self.set(*dest, self.global_addrs[*global as usize] as i64)
            }
            Inst::FieldAddr {
                dest, base, offset, ..
            } => {
                let b = self.get(*base) as u64;
                let v = b.wrapping_add(*offset as u64);
                self.observer.on_field_addr(&self.mem, b, *offset, v);
                self.set(*dest, v as i64);
            }
            Inst::IndexAddr {
                dest,
                base,
                index,
                elem_size,
            } => {
                let v = self
                    .get(*base)
                    .wrapping_add(self.get(*index).wrapping_mul(*elem_size as i64));
                self.set(*dest, v);
            }
            Inst::Load {
                dest,
                addr,
                width,
                site,
                pos,
                target,
            } => {
                let a = self.get(*addr) as u64;
                let slots = self.resolve(a, *width, target, *pos)?;
                self.counters.loads += 1;
                if let Some(table) = self.table {
                    self.counters.loads_checked += 1;
                    let observed: Vec<DefSiteId> =
                        slots.iter().map(|s| observed_def(&self.mem, s)).collect();
                    self.observer
                        .on_load(&self.mem, a, *width, *site, &observed);
                    if let Err(v) = check_use(&self.mem, &slots, *site, table) {
                        let detail = self.violation(*site, *pos, table, v);
                        self.violations.push(detail);
                        if !self.config.log_continue {
                            return Err(Stop::Violation);
                        }
                    }
                } else {
                    self.observer.on_load(&self.mem, a, *width, *site, &[]);
                }
                let v = self.mem.read(a, *width);
                self.set(*dest, v);
            }
            Inst::Store {
                addr,
                value,
                width,
                site,
                pos,
                target,
            } => {
                let a = self.get(*addr) as u64;
                let slots = self.resolve(a, *width, target, *pos)?;
                self.counters.stores += 1;
                self.mem.write(a, *width, self.get(*value));
                if self.table.is_some() {
                    self.counters.stores_recorded += 1;
                    record_def(&mut self.mem, &slots, *site);
                }
                self.observer.on_store(&self.mem, a, *width, *site);
            }
            Inst::Free { addr, pos } => {
                let a = self.get(*addr) as u64;
                if a == 0 {
                    return Ok(());
                }
                let invalid = |m: &Self, msg: String| m.fault(FaultKind::InvalidFree, Some(a), msg);
                if let Some(owner) = self.mem.owner(a) {
                    let site = self.mem.allocation(owner).site;
                    if prog.alloc_site(site).kind != AllocKind::Heap
                        && self.mem.allocation(owner).base == a
                    {
                        return Err(invalid(
                            self,
                            format!("free at {pos} of non-heap object {:#x}", a),
                        ));
                    }
                }
                self.mem
                    .deallocate(
                        a,
                        Release::Free {
                            line: pos.line,
                            col: pos.col,
                        },
                    )
                    .map_err(|e| invalid(self, format!("free at {pos}: {e}")))?;
                self.counters.frees += 1;
                self.observer.on_free(&self.mem, a);
            }
            Inst::Binary { dest, op, lhs, rhs } => {
                let (l, r) = (self.get(*lhs), self.get(*rhs));
                let (li, ri) = (l as i32, r as i32);
                let v = match op {
                    BinOp::Add => li.wrapping_add(ri) as i64,
                    BinOp::Sub => li.wrapping_sub(ri) as i64,
                    BinOp::Mul => li.wrapping_mul(ri) as i64,
                    BinOp::Div => {
                        if ri == 0 {
                            return Err(self.fault(
                                FaultKind::DivideByZero,
                                None,
                                "division by zero".into(),
                            ));
                        }
                        li.wrapping_div(ri) as i64
                    }
                    BinOp::Lt => (l < r) as i64,
                    BinOp::Le => (l <= r) as i64,
                    BinOp::Gt => (l > r) as i64,
                    BinOp::Ge => (l >= r) as i64,
                    BinOp::Eq => (l == r) as i64,
                    BinOp::Ne => (l != r) as i64,
                };
                self.set(*dest, v);
            }
            Inst::Neg { dest, src } => {
                let v = (self.get(*src) as i32).wrapping_neg();
                self.set(*dest, v as i64);
            }
            Inst::Narrow { dest, src } => {
                let v = self.get(*src) as i8;
                self.set(*dest, v as i64);
            }
            Inst::Call { dest, func, args } => {
                let values: Vec<i64> = args.iter().map(|r| self.get(*r)).collect();
                self.push_frame(*func, &values, *dest)?;
            }
            Inst::Print { value } => {
                let v = self.get(*value);
                self.output.push(v);
            }
        }
        Ok(())
    }

    fn violation(
        &self,
        use_site: UseSiteId,
        pos: Pos,
        table: &CompressedTable,
        v: SlotViolation,
    ) -> ViolationDetail {
        let alloc = self.mem.allocation(v.slot.alloc);
        let site = self.prog.alloc_site(alloc.site);
        let def_pos = (v.observed != DefSiteId::INITIAL && v.observed != DefSiteId::RELEASED)
            .then(|| self.def_pos[v.observed.0 as usize - 1]);
        let released_by = (v.observed == DefSiteId::RELEASED).then(|| match &alloc.released {
            Some(Release::Free { line, col }) => format!("free at {line}:{col}"),
            Some(Release::FrameExit { function }) => format!("return from {function}"),
            None => "release".to_string(),
        });
        ViolationDetail {
            use_site: use_site.0,
            observed_def: v.observed.0,
            legal_set_id: table.set_id(use_site),
            legal_set: table.legal(use_site).to_vec(),
            address: v.slot.addr,
            use_line: pos.line,
            use_col: pos.col,
            def_line: def_pos.map(|p| p.line),
            def_col: def_pos.map(|p| p.col),
            alloc_site: alloc.site.0,
            object: site.name.clone(),
            slot: v.slot.slot,
            slot_path: alloc.layout.slots[v.slot.slot as usize].path.clone(),
            released_by,
        }
    }
}
