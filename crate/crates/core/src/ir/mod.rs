// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

//! Instruction-level IR in which every memory write is a definition site and
//! every memory read a use site.
//!
//! Virtual registers hold scalars and addresses and are not tracked; only
//! memory is. Every variable (global, local or parameter) therefore lives in
//! an allocation created by an `Alloc` instruction.

mod lower;
mod sites;
mod text;
mod validate;

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::frontend::ast::{BinOp, Pos};
use crate::frontend::{Type, TypeLayout, TypeTable};

pub use lower::lower;
pub use sites::{enumerate_sites, AllocSiteEntry, SiteCatalog, SiteEntry};
pub use text::emit_text;
pub use validate::validate_ir;

macro_rules! id_type {
    ($name:ident, $prefix:literal) => {
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

id_type!(Reg, "%");
id_type!(BlockId, "bb");
id_type!(DefSiteId, "d");
id_type!(UseSiteId, "u");
id_type!(AllocSiteId, "a");
id_type!(FuncIdx, "f");

impl DefSiteId {
    /// "Never written": the value every slot holds right after allocation.
    pub const INITIAL: DefSiteId = DefSiteId(0);
    /// Shadow value of a slot whose owning object has been released.
    pub const RELEASED: DefSiteId = DefSiteId(u32::MAX);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AllocKind {
    Global,
    Stack,
    Heap,
}

impl fmt::Display for AllocKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AllocKind::Global => "global",
            AllocKind::Stack => "stack",
            AllocKind::Heap => "heap",
        })
    }
}

/// Static description of one allocation statement.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocSite {
    pub id: AllocSiteId,
    pub kind: AllocKind,
    /// Declared type, or the element type of a heap allocation.
    pub ty: Type,
    /// Layout of `ty`. Heap arrays of `ty` have the same slots.
    pub layout: TypeLayout,
    /// Variable name, or `malloc` for heap sites.
    pub name: String,
    pub function: String,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Inst {
    Const {
        dest: Reg,
        value: i64,
    },
    Alloc {
        dest: Reg,
        site: AllocSiteId,
        /// Element count for `malloc(sizeof(T) * n)`.
        count: Option<Reg>,
    },
    /// Address of a global variable.
    AddrOf {
        dest: Reg,
        global: u32,
    },
    FieldAddr {
        dest: Reg,
        base: Reg,
        offset: u32,
        field: String,
    },
    IndexAddr {
        dest: Reg,
        base: Reg,
        index: Reg,
        elem_size: u32,
    },
    Load {
        dest: Reg,
        addr: Reg,
        width: u32,
        site: UseSiteId,
        pos: Pos,
        target: String,
    },
    Store {
        addr: Reg,
        value: Reg,
        width: u32,
        site: DefSiteId,
        pos: Pos,
        target: String,
    },
    Free {
        addr: Reg,
        pos: Pos,
    },
    Binary {
        dest: Reg,
        op: BinOp,
        lhs: Reg,
        rhs: Reg,
    },
    Neg {
        dest: Reg,
        src: Reg,
    },
    Narrow {
        dest: Reg,
        src: Reg,
    },
    Call {
        dest: Option<Reg>,
        func: FuncIdx,
        args: Vec<Reg>,
    },
    Print {
        value: Reg,
    },
}

impl Inst {
    pub fn dest(&self) -> Option<Reg> {
        match self {
            Inst::Const { dest, .. }
            | Inst::Alloc { dest, .. }
            | Inst::AddrOf { dest, .. }
            | Inst::FieldAddr { dest, .. }
            | Inst::IndexAddr { dest, .. }
            | Inst::Load { dest, .. }
            | Inst::Binary { dest, .. }
            | Inst::Neg { dest, .. }
            | Inst::Narrow { dest, .. } => Some(*dest),
            Inst::Call { dest, .. } => *dest,
            Inst::Store { .. } | Inst::Free { .. } | Inst::Print { .. } => None,
        }
    }

    pub fn operands(&self) -> Vec<Reg> {
        match self {
            Inst::Const { .. } | Inst::AddrOf { .. } => vec![],
            Inst::Alloc { count, .. } => count.iter().copied().collect(),
            Inst::FieldAddr { base, .. } => vec![*base],
            Inst::IndexAddr { base, index, .. } => vec![*base, *index],
            Inst::Load { addr, .. } | Inst::Free { addr, .. } => vec![*addr],
            Inst::Store { addr, value, .. } => vec![*addr, *value],
            Inst::Binary { lhs, rhs, .. } => vec![*lhs, *rhs],
            Inst::Neg { src, .. } | Inst::Narrow { src, .. } => vec![*src],
            Inst::Call { args, .. } => args.clone(),
            Inst::Print { value } => vec![*value],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Terminator {
    Jump(BlockId),
    Branch {
        cond: Reg,
        then_bb: BlockId,
        else_bb: BlockId,
    },
    Ret(Option<Reg>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub insts: Vec<Inst>,
    pub term: Terminator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrFunction {
    pub name: String,
    /// Registers receiving the arguments, in order.
    pub params: Vec<Reg>,
    pub ret: Type,
    /// Type of every register, indexed by register number.
    pub reg_types: Vec<Type>,
    pub blocks: Vec<Block>,
}

impl IrFunction {
    pub fn reg_type(&self, r: Reg) -> Option<&Type> {
        self.reg_types.get(r.0 as usize)
    }

    pub fn insts(&self) -> impl Iterator<Item = &Inst> {
        self.blocks.iter().flat_map(|b| b.insts.iter())
    }

    pub fn inst_count(&self) -> usize {
        self.blocks.iter().map(|b| b.insts.len() + 1).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrProgram {
    pub types: TypeTable,
    pub alloc_sites: Vec<AllocSite>,
    /// Alloc site of every global, indexed by global number.
    pub global_sites: Vec<AllocSiteId>,
    /// User functions followed by the global initializer.
    pub functions: Vec<IrFunction>,
    pub main: FuncIdx,
    pub init: FuncIdx,
    pub def_count: u32,
    pub use_count: u32,
}

impl IrProgram {
    pub fn function(&self, f: FuncIdx) -> &IrFunction {
        &self.functions[f.0 as usize]
    }

    pub fn alloc_site(&self, id: AllocSiteId) -> &AllocSite {
        &self.alloc_sites[id.0 as usize]
    }

    /// Total instruction count, terminators included.
    pub fn inst_count(&self) -> usize {
        self.functions.iter().map(IrFunction::inst_count).sum()
    }

    /// Hex SHA-256 of the textual IR; ties analysis tables to one program.
    pub fn content_hash(&self) -> String {
        let digest = Sha256::digest(emit_text(self).as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn main_params(&self) -> &[Reg] {
        &self.function(self.main).params
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("IR invariant violated in {function} {location}: {message}")]
pub struct IrError {
    pub function: String,
    pub location: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{pos}: cannot lower: {message}")]
pub struct LoweringError {
    pub pos: Pos,
    pub message: String,
}
