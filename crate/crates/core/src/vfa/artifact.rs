// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

//! Whole-program analysis driver and its JSON artifact.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ir::{enumerate_sites, IrProgram, SiteCatalog};

use super::compress::{compress_sets, CompressedTable};
use super::constraints::{build_constraints, ConstraintSet};
use super::legal::{compute_legal_defs, field_insensitive_projection, LegalDefTable};
use super::solver::{solve_points_to, PointsToSolution};

/// Version of the tables JSON layout.
pub const SCHEMA_VERSION: u32 = 1;

/// Everything the static phase derives from one program.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub program_hash: String,
    pub catalog: SiteCatalog,
    pub constraints: ConstraintSet,
    pub solution: PointsToSolution,
    pub field_sensitive: LegalDefTable,
    pub field_insensitive: LegalDefTable,
    pub compressed: CompressedTable,
    pub compressed_insensitive: CompressedTable,
}

pub fn analyze(prog: &IrProgram) -> Analysis {
    let program_hash = prog.content_hash();
    let constraints = build_constraints(prog);
    let solution = solve_points_to(&constraints);
    let field_sensitive = compute_legal_defs(&program_hash, &constraints, &solution, false);
    let field_insensitive =
        field_insensitive_projection(&program_hash, &constraints, &solution, false);
    Analysis {
        catalog: enumerate_sites(prog),
        compressed: compress_sets(&field_sensitive),
        compressed_insensitive: compress_sets(&field_insensitive),
        program_hash,
        constraints,
        solution,
        field_sensitive,
        field_insensitive,
    }
}

impl Analysis {
    pub fn artifact(&self, strict_init: bool) -> TablesArtifact {
        let (fs, fi) = if strict_init {
            (
                self.compressed.without_initial(),
                self.compressed_insensitive.without_initial(),
            )
        } else {
            (self.compressed.clone(), self.compressed_insensitive.clone())
        };
        let points_to = self
            .solution
            .iter()
            .map(|(node, locs)| {
                (
                    node.to_string(),
                    locs.iter().map(|l| l.to_string()).collect(),
                )
            })
            .collect();
        let stats = TableStats {
            uses: fs.use_count(),
            defs: self.catalog.defs.len(),
            alloc_sites: self.catalog.allocs.len(),
            legal_entries: fs.decompress().total_size(),
            distinct_sets: fs.distinct_sets(),
            compressed_entries: fs.stored_entries(),
            insensitive_legal_entries: fi.decompress().total_size(),
            insensitive_distinct_sets: fi.distinct_sets(),
        };
        TablesArtifact {
            schema_version: SCHEMA_VERSION,
            program_hash: self.program_hash.clone(),
            strict_init,
            sites: self.catalog.clone(),
            points_to,
            legal_defs: fs.decompress().sets,
            compressed: fs,
            field_insensitive: fi,
            stats,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableStats {
    pub uses: usize,
    pub defs: usize,
    pub alloc_sites: usize,
    /// Sum of legal-set sizes over all uses.
    pub legal_entries: usize,
    pub distinct_sets: usize,
    pub compressed_entries: usize,
    pub insensitive_legal_entries: usize,
    pub insensitive_distinct_sets: usize,
}

/// Serialized output of `fsdfi analyze`. Field order is the key order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TablesArtifact {
    pub schema_version: u32,
    pub program_hash: String,
    pub strict_init: bool,
    pub sites: SiteCatalog,
    /// Non-empty points-to sets keyed by node, e.g. `f0:%3` or `*a2.1`.
    pub points_to: BTreeMap<String, Vec<String>>,
    /// Field-sensitive legal set of every use.
    pub legal_defs: Vec<Vec<u32>>,
    pub compressed: CompressedTable,
    pub field_insensitive: CompressedTable,
    pub stats: TableStats,
}

impl TablesArtifact {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("artifact serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}
