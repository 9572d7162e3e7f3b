// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::ir::{DefSiteId, UseSiteId};

use super::legal::LegalDefTable;

/// Legal-def table with identical sets stored once.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CompressedTable {
    pub program_hash: String,
    pub strict_init: bool,
    /// Set id of every use, indexed by use id.
    pub use_to_set: Vec<u32>,
    /// Sorted def ids. Ids are assigned in order of first appearance.
    pub sets: Vec<Vec<u32>>,
}

pub fn compress_sets(table: &LegalDefTable) -> CompressedTable {
    let mut index: HashMap<&[u32], u32> = HashMap::new();
    let mut sets = Vec::new();
    let use_to_set = table
        .sets
        .iter()
        .map(|set| {
            *index.entry(set.as_slice()).or_insert_with(|| {
                sets.push(set.clone());
                sets.len() as u32 - 1
            })
        })
        .collect();
    CompressedTable {
        program_hash: table.program_hash.clone(),
        strict_init: table.strict_init,
        use_to_set,
        sets,
    }
}

impl CompressedTable {
    pub fn decompress(&self) -> LegalDefTable {
        LegalDefTable {
            program_hash: self.program_hash.clone(),
            strict_init: self.strict_init,
            sets: self
                .use_to_set
                .iter()
                .map(|&s| self.sets[s as usize].clone())
                .collect(),
        }
    }

    pub fn set_id(&self, use_site: UseSiteId) -> u32 {
        self.use_to_set[use_site.0 as usize]
    }

    pub fn legal(&self, use_site: UseSiteId) -> &[u32] {
        &self.sets[self.set_id(use_site) as usize]
    }

    pub fn contains(&self, use_site: UseSiteId, def: DefSiteId) -> bool {
        self.legal(use_site).binary_search(&def.0).is_ok()
    }

    pub fn distinct_sets(&self) -> usize {
        self.sets.len()
    }

    pub fn use_count(&self) -> usize {
        self.use_to_set.len()
    }

    /// Stored def-id entries plus one set id per use.
    pub fn stored_entries(&self) -> usize {
        self.sets.iter().map(Vec::len).sum::<usize>() + self.use_to_set.len()
    }

    /// The same table with the initial def removed from every set.
    pub fn without_initial(&self) -> CompressedTable {
        let mut table = self.decompress();
        for set in &mut table.sets {
            set.retain(|&d| d != DefSiteId::INITIAL.0);
        }
        table.strict_init = true;
        compress_sets(&table)
    }
}
