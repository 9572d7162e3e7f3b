// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

//! Run-time half: the enforcing interpreter.
//!
//! Objects live in a byte-accurate [`MemoryImage`], so an out-of-bounds write
//! really lands in whatever is next to the target. Each object carries one
//! shadow entry per field slot holding the def site that last wrote it, and
//! every load checks the entries it touches against its legal set.

mod diagnose;
mod interp;
mod memory;
mod shadow;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use diagnose::{diagnose, Diagnostic};
pub use interp::{interpret, tables_for, NoObserver, Observer};
pub use memory::{
    init_memory, AllocFailure, AllocId, Allocation, ArenaConfig, ConfigError, FreeError,
    MemoryImage, Release, ResolvedSlot, Unmapped,
};
pub use shadow::{check_use, observed_def, record_def, SlotViolation};

/// Default instruction budget.
pub const DEFAULT_BUDGET: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// No recording or checking.
    Baseline,
    /// Field-sensitive legal sets.
    Protected,
    /// Whole-object legal sets.
    FieldInsensitive,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Protected, Mode::FieldInsensitive, Mode::Baseline];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Baseline => "baseline",
            Mode::Protected => "protected",
            Mode::FieldInsensitive => "field-insensitive",
        }
    }

    pub fn is_checked(self) -> bool {
        self != Mode::Baseline
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "baseline" => Ok(Mode::Baseline),
            "protected" => Ok(Mode::Protected),
            "field-insensitive" => Ok(Mode::FieldInsensitive),
            _ => Err(format!(
                "unknown mode `{s}` (expected baseline, protected or field-insensitive)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunConfig {
    pub mode: Mode,
    /// Treat reads of never-written slots as violations.
    pub strict_init: bool,
    /// Record violations and keep running instead of stopping at the first.
    pub log_continue: bool,
    pub budget: u64,
    pub max_call_depth: usize,
    pub arena: ArenaConfig,
}

impl RunConfig {
    pub fn new(mode: Mode) -> Self {
        RunConfig {
            mode,
            strict_init: false,
            log_continue: false,
            budget: DEFAULT_BUDGET,
            max_call_depth: 10_000,
            arena: ArenaConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Completed,
    Violation,
    MemoryFault,
    ResourceLimit,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::Completed => "completed",
            Outcome::Violation => "violation",
            Outcome::MemoryFault => "memory-fault",
            Outcome::ResourceLimit => "resource-limit",
        }
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Completed => 0,
            Outcome::Violation => 10,
            Outcome::MemoryFault => 11,
            Outcome::ResourceLimit => 12,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Outcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "completed" => Ok(Outcome::Completed),
            "violation" => Ok(Outcome::Violation),
            "memory-fault" => Ok(Outcome::MemoryFault),
            "resource-limit" => Ok(Outcome::ResourceLimit),
            _ => Err(format!("unknown outcome `{s}`")),
        }
    }
}

/// A load that observed an illegal last writer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationDetail {
    pub use_site: u32,
    /// Def id found in the shadow; `4294967295` for released memory.
    pub observed_def: u32,
    pub legal_set_id: u32,
    pub legal_set: Vec<u32>,
    pub address: u64,
    pub use_line: u32,
    pub use_col: u32,
    /// Source position of the observed def, when it is a real def site.
    pub def_line: Option<u32>,
    pub def_col: Option<u32>,
    pub alloc_site: u32,
    pub object: String,
    pub slot: u32,
    pub slot_path: String,
    /// How the object was released, for reads of released memory.
    pub released_by: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaultKind {
    Unmapped,
    InvalidFree,
    DivideByZero,
    NegativeSize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultDetail {
    pub kind: FaultKind,
    pub address: Option<u64>,
    pub function: String,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counters {
    /// IR instructions and terminators executed.
    pub instructions: u64,
    pub loads: u64,
    pub stores: u64,
    pub loads_checked: u64,
    pub stores_recorded: u64,
    pub allocations: u64,
    pub frees: u64,
    pub peak_live_slots: u64,
    pub peak_live_bytes: u64,
    /// Shadow bytes at the slot peak, four per slot.
    pub metadata_bytes: u64,
    /// Object bytes at the byte peak.
    pub program_bytes: u64,
    /// Shadow bytes a four-byte-per-data-byte scheme would need at the byte peak.
    pub per_byte_shadow_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionReport {
    pub program_hash: String,
    pub mode: Mode,
    pub strict_init: bool,
    pub outcome: Outcome,
    pub violation: Option<ViolationDetail>,
    /// Every violation seen; more than one only with `log_continue`.
    pub violations: Vec<ViolationDetail>,
    pub fault: Option<FaultDetail>,
    pub limit: Option<String>,
    pub counters: Counters,
    /// Values printed by the program.
    pub output: Vec<i64>,
}

impl ExecutionReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunError {
    #[error("tables belong to program {found}, not {expected}")]
    TableMismatch { expected: String, found: String },
    #[error("tables were built {} strict initialization", if *.0 { "with" } else { "without" })]
    StrictMismatch(bool),
    #[error("mode {0} needs legal-def tables")]
    MissingTables(Mode),
    #[error("main takes {expected} inputs, got {got}")]
    InputArity { expected: usize, got: usize },
    #[error(transparent)]
    Config(#[from] ConfigError),
}
