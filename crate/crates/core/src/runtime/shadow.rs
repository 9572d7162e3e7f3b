// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

//! Per-slot last-writer metadata.

use crate::ir::{DefSiteId, UseSiteId};
use crate::vfa::CompressedTable;

use super::memory::{MemoryImage, ResolvedSlot};

/// A slot whose last writer is not in the reading use's legal set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotViolation {
    pub slot: ResolvedSlot,
    pub observed: DefSiteId,
}

/// Marks `def` as the last writer of every listed slot. Slots of released
/// objects keep their sentinel.
pub fn record_def(mem: &mut MemoryImage, slots: &[ResolvedSlot], def: DefSiteId) {
    for r in slots {
        let alloc = mem.allocation_mut(r.alloc);
        if alloc.live {
            alloc.shadow[r.slot as usize] = def.0;
        }
    }
}

/// Last writer of one slot.
pub fn observed_def(mem: &MemoryImage, slot: &ResolvedSlot) -> DefSiteId {
    DefSiteId(mem.allocation(slot.alloc).shadow[slot.slot as usize])
}

/// Checks every slot in order and reports the first one whose last writer is
/// illegal for `use_site`.
pub fn check_use(
    mem: &MemoryImage,
    slots: &[ResolvedSlot],
    use_site: UseSiteId,
    table: &CompressedTable,
) -> Result<(), SlotViolation> {
    for r in slots {
        let observed = observed_def(mem, r);
        if !table.contains(use_site, observed) {
            return Err(SlotViolation { slot: *r, observed });
        }
    }
    Ok(())
}
