// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

//! Compile-time half: field-sensitive points-to analysis and the legal
//! write→read relation derived from it.
//!
//! The analysis is inclusion-based (Andersen-style), flow- and
//! context-insensitive, with allocation-site abstraction for heap objects.
//! Its abstract memory unit is an [`AbstractLoc`]: an allocation site paired
//! with one field slot of that site's layout. A use `u` may legally observe a
//! def `d` when some location `d` may write is also a location `u` may read.

mod artifact;
mod compress;
mod constraints;
mod legal;
mod solver;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::ir::{AllocSiteId, FuncIdx, Reg};

pub use artifact::{analyze, Analysis, TablesArtifact, SCHEMA_VERSION};
pub use compress::{compress_sets, CompressedTable};
pub use constraints::{build_constraints, Constraint, ConstraintSet};
pub use legal::{
    abstract_locs_read, abstract_locs_written, compute_legal_defs, field_insensitive_projection,
    LegalDefTable,
};
pub use solver::{solve_points_to, PointsToSolution};

/// Slot component of an abstract location.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SlotRef {
    Slot(u32),
    /// Every slot of the object.
    Top,
}

/// (allocation site, field slot): the field-sensitive abstract memory unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AbstractLoc {
    pub alloc: AllocSiteId,
    pub slot: SlotRef,
}

impl AbstractLoc {
    pub fn new(alloc: AllocSiteId, slot: u32) -> Self {
        AbstractLoc {
            alloc,
            slot: SlotRef::Slot(slot),
        }
    }

    pub fn top(alloc: AllocSiteId) -> Self {
        AbstractLoc {
            alloc,
            slot: SlotRef::Top,
        }
    }
}

impl fmt::Display for AbstractLoc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.slot {
            SlotRef::Slot(s) => write!(f, "{}.{s}", self.alloc),
            SlotRef::Top => write!(f, "{}.*", self.alloc),
        }
    }
}

impl FromStr for AbstractLoc {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("malformed abstract location `{s}`");
        let rest = s.strip_prefix('a').ok_or_else(bad)?;
        let (alloc, slot) = rest.split_once('.').ok_or_else(bad)?;
        let alloc = AllocSiteId(alloc.parse().map_err(|_| bad())?);
        let slot = if slot == "*" {
            SlotRef::Top
        } else {
            SlotRef::Slot(slot.parse().map_err(|_| bad())?)
        };
        Ok(AbstractLoc { alloc, slot })
    }
}

impl Serialize for AbstractLoc {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AbstractLoc {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A pointer-holding entity of the constraint system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Reg(FuncIdx, Reg),
    /// Return value of a function.
    Ret(FuncIdx),
    /// Contents of an abstract memory location.
    Mem(AbstractLoc),
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Reg(func, r) => write!(f, "{func}:{r}"),
            Node::Ret(func) => write!(f, "{func}:ret"),
            Node::Mem(loc) => write!(f, "*{loc}"),
        }
    }
}
