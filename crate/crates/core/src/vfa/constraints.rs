// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

use crate::frontend::Type;
use crate::ir::{AllocSiteId, FuncIdx, Inst, IrProgram, Terminator};

use super::{AbstractLoc, Node, SlotRef};

/// One inclusion constraint.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Constraint {
    /// `pts(dst) ⊇ {loc}`
    AddrOf { dst: Node, loc: AbstractLoc },
    /// `pts(dst) ⊇ pts(src)`
    Copy { dst: Node, src: Node },
    /// `pts(dst) ⊇ { field(l, offset) | l ∈ pts(src) }`
    Field { dst: Node, src: Node, offset: u32 },
    /// `pts(dst) ⊇ *pts(ptr)`
    Load { dst: Node, ptr: Node },
    /// `*pts(ptr) ⊇ pts(src)`
    Store { ptr: Node, src: Node },
}

/// Constraints of a program together with what is needed to interpret them.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    /// In creation order.
    pub constraints: Vec<Constraint>,
    /// Start offset (element 0) of each slot, per alloc site.
    pub slot_offsets: Vec<Vec<u32>>,
    /// Address operand of each def site, indexed by `id - 1`.
    pub def_addrs: Vec<Node>,
    /// Address operand of each use site, indexed by id.
    pub use_addrs: Vec<Node>,
}

impl ConstraintSet {
    pub fn slot_count(&self, alloc: AllocSiteId) -> u32 {
        self.slot_offsets[alloc.0 as usize].len() as u32
    }

    /// Location reached by moving `offset` bytes into the object from `loc`.
    /// Offsets that do not start a slot collapse to the whole object.
    pub fn field(&self, loc: AbstractLoc, offset: u32) -> AbstractLoc {
        match loc.slot {
            SlotRef::Top => loc,
            SlotRef::Slot(s) => {
                let offsets = &self.slot_offsets[loc.alloc.0 as usize];
                let target = offsets[s as usize] + offset;
                match offsets.iter().position(|&o| o == target) {
                    Some(k) => AbstractLoc::new(loc.alloc, k as u32),
                    None => AbstractLoc::top(loc.alloc),
                }
            }
        }
    }

    /// Concrete slots denoted by `loc`.
    pub fn expand(&self, loc: AbstractLoc) -> impl Iterator<Item = AbstractLoc> {
        let (range, alloc) = match loc.slot {
            SlotRef::Slot(s) => (s..s + 1, loc.alloc),
            SlotRef::Top => (0..self.slot_count(loc.alloc), loc.alloc),
        };
        range.map(move |s| AbstractLoc::new(alloc, s))
    }
}

pub fn build_constraints(prog: &IrProgram) -> ConstraintSet {
    let mut out = Vec::new();
    let mut def_addrs = vec![None; prog.def_count as usize];
    let mut use_addrs = vec![None; prog.use_count as usize];

    for (fi, func) in prog.functions.iter().enumerate() {
        let fidx = FuncIdx(fi as u32);
        let node = |r| Node::Reg(fidx, r);
        let is_ptr = |r| func.reg_type(r).is_some_and(Type::is_pointer);
        for block in &func.blocks {
            for inst in &block.insts {
                match inst {
                    Inst::Alloc { dest, site, .. } => out.push(Constraint::AddrOf {
                        dst: node(*dest),
                        loc: AbstractLoc::new(*site, 0),
                    }),
                    Inst::AddrOf { dest, global } => out.push(Constraint::AddrOf {
                        dst: node(*dest),
                        loc: AbstractLoc::new(prog.global_sites[*global as usize], 0),
                    }),
                    Inst::FieldAddr {
                        dest, base, offset, ..
                    } => out.push(Constraint::Field {
                        dst: node(*dest),
                        src: node(*base),
                        offset: *offset,
                    }),
                    Inst::IndexAddr { dest, base, .. } => out.push(Constraint::Copy {
                        dst: node(*dest),
                        src: node(*base),
                    }),
                    Inst::Load {
                        dest, addr, site, ..
                    } => {
                        use_addrs[site.0 as usize] = Some(node(*addr));
                        if is_ptr(*dest) {
                            out.push(Constraint::Load {
                                dst: node(*dest),
                                ptr: node(*addr),
                            });
                        }
                    }
                    Inst::Store {
                        addr, value, site, ..
                    } => {
                        def_addrs[site.0 as usize - 1] = Some(node(*addr));
                        if is_ptr(*value) {
                            out.push(Constraint::Store {
                                ptr: node(*addr),
                                src: node(*value),
                            });
                        }
                    }
                    Inst::Call {
                        dest,
                        func: callee,
                        args,
                    } => {
                        let target = prog.function(*callee);
                        for (arg, param) in args.iter().zip(&target.params) {
                            if is_ptr(*arg) {
                                out.push(Constraint::Copy {
                                    dst: Node::Reg(*callee, *param),
                                    src: node(*arg),
                                });
                            }
                        }
                        if let Some(d) = dest {
                            if is_ptr(*d) {
                                out.push(Constraint::Copy {
                                    dst: node(*d),
                                    src: Node::Ret(*callee),
                                });
                            }
                        }
                    }
                    Inst::Const { .. }
                    | Inst::Free { .. }
                    | Inst::Binary { .. }
                    | Inst::Neg { .. }
                    | Inst::Narrow { .. }
                    | Inst::Print { .. } => {}
                }
            }
            if let Terminator::Ret(Some(r)) = block.term {
                if is_ptr(r) {
                    out.push(Constraint::Copy {
                        dst: Node::Ret(fidx),
                        src: node(r),
                    });
                }
            }
        }
    }

    ConstraintSet {
        constraints: out,
        slot_offsets: prog
            .alloc_sites
            .iter()
            .map(|s| s.layout.slots.iter().map(|slot| slot.offset).collect())
            .collect(),
        def_addrs: def_addrs
            .into_iter()
            .map(|n| n.expect("validated IR has dense def ids"))
            .collect(),
        use_addrs: use_addrs
            .into_iter()
            .map(|n| n.expect("validated IR has dense use ids"))
            .collect(),
    }
}
