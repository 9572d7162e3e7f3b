// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

//! Observers that re-derive runtime metadata from the event stream and
//! compare it with what the interpreter holds.

use std::collections::BTreeMap;

use fsdfi_core::frontend::TypeLayout;
use fsdfi_core::ir::{AllocSiteId, DefSiteId, UseSiteId};
use fsdfi_core::runtime::{MemoryImage, Observer};
use fsdfi_core::vfa::LegalDefTable;

/// Slot of byte `offset` of an object, computed from the layout segments.
fn slot_of(layout: &TypeLayout, size: u64, offset: u64) -> u32 {
    let tail = layout.segments.last().map_or(0, |s| s.slot);
    if offset >= size || layout.size == 0 {
        return tail;
    }
    let within = (offset % layout.size as u64) as u32;
    layout
        .segments
        .iter()
        .find(|s| within >= s.offset && within < s.offset + s.len)
        .map_or(tail, |s| s.slot)
}

struct Object {
    chunk: u64,
    size: u64,
    layout: TypeLayout,
    live: bool,
    /// (sequence number, def id) of the last store to each chunk byte.
    bytes: Vec<(u64, u32)>,
}

impl Object {
    /// Last writer of every slot: the latest store touching any of its bytes.
    fn expected_shadow(&self) -> Vec<u32> {
        if !self.live {
            return vec![DefSiteId::RELEASED.0; self.layout.slots.len()];
        }
        let mut best = vec![(0u64, DefSiteId::INITIAL.0); self.layout.slots.len()];
        for (off, (seq, def)) in self.bytes.iter().enumerate() {
            let slot = slot_of(&self.layout, self.size, off as u64) as usize;
            if *seq > best[slot].0 {
                best[slot] = (*seq, *def);
            }
        }
        best.into_iter().map(|(_, d)| d).collect()
    }
}

/// Replays stores at byte granularity and checks the interpreter's per-slot
/// shadow after every store and before every checked load.
#[derive(Default)]
pub struct ShadowOracle {
    objects: BTreeMap<u64, Object>,
    seq: u64,
    pub checks: u64,
    pub mismatches: Vec<String>,
}

impl ShadowOracle {
    fn owner(&self, addr: u64) -> Option<u64> {
        self.objects
            .range(..=addr)
            .next_back()
            .filter(|(base, o)| addr < **base + o.chunk)
            .map(|(base, _)| *base)
    }

    fn compare(&mut self, mem: &MemoryImage, base: u64) {
        let Some(id) = mem.owner(base) else {
            self.mismatches
                .push(format!("object {base:#x} unknown to the interpreter"));
            return;
        };
        let actual = &mem.allocation(id).shadow;
        let expected = self.objects[&base].expected_shadow();
        self.checks += 1;
        if *actual != expected {
            self.mismatches.push(format!(
                "object {base:#x}: shadow {actual:?}, replay {expected:?}"
            ));
        }
    }
}

impl Observer for ShadowOracle {
    fn on_alloc(&mut self, mem: &MemoryImage, base: u64, _site: AllocSiteId) {
        let a = mem.allocation(mem.owner(base).expect("fresh allocation is mapped"));
        self.objects.insert(
            base,
            Object {
                chunk: a.chunk_size,
                size: a.size,
                layout: (*a.layout).clone(),
                live: true,
                bytes: vec![(0, DefSiteId::INITIAL.0); a.chunk_size as usize],
            },
        );
    }

    fn on_free(&mut self, mem: &MemoryImage, base: u64) {
        if let Some(o) = self.objects.get_mut(&base) {
            o.live = false;
        }
        self.compare(mem, base);
    }

    fn on_store(&mut self, mem: &MemoryImage, addr: u64, width: u32, def: DefSiteId) {
        self.seq += 1;
        let mut touched = Vec::new();
        for a in addr..addr + width as u64 {
            if let Some(base) = self.owner(a) {
                let o = self.objects.get_mut(&base).expect("owner exists");
                if o.live {
                    o.bytes[(a - base) as usize] = (self.seq, def.0);
                }
                if !touched.contains(&base) {
                    touched.push(base);
                }
            }
        }
        for base in touched {
            self.compare(mem, base);
        }
    }

    fn on_load(
        &mut self,
        _mem: &MemoryImage,
        addr: u64,
        width: u32,
        _use_site: UseSiteId,
        observed: &[DefSiteId],
    ) {
        if observed.is_empty() {
            return;
        }
        let mut expected = Vec::new();
        let mut last: Option<(u64, u32)> = None;
        for a in addr..addr + width as u64 {
            let Some(base) = self.owner(a) else {
                self.mismatches
                    .push(format!("load from unknown address {a:#x}"));
                return;
            };
            let o = &self.objects[&base];
            let slot = slot_of(&o.layout, o.size, a - base);
            if last != Some((base, slot)) {
                expected.push(DefSiteId(o.expected_shadow()[slot as usize]));
                last = Some((base, slot));
            }
        }
        self.checks += 1;
        if expected != observed {
            self.mismatches.push(format!(
                "load at {addr:#x}: observed {observed:?}, replay {expected:?}"
            ));
        }
    }
}

/// Tracks the live slot total from allocation events and compares it with
/// the interpreter's counter and a recount of its allocation records.
#[derive(Default)]
pub struct LiveSlotAudit {
    live: BTreeMap<u64, u64>,
    pub checks: u64,
    pub peak: u64,
    pub mismatches: Vec<String>,
}

impl LiveSlotAudit {
    fn audit(&mut self, mem: &MemoryImage) {
        let sum: u64 = self.live.values().sum();
        self.peak = self.peak.max(sum);
        self.checks += 1;
        if sum != mem.live_slots() || sum != mem.recount_live_slots() {
            self.mismatches.push(format!(
                "live slots: events {sum}, counter {}, recount {}",
                mem.live_slots(),
                mem.recount_live_slots()
            ));
        }
    }
}

impl Observer for LiveSlotAudit {
    fn on_alloc(&mut self, mem: &MemoryImage, base: u64, _site: AllocSiteId) {
        let a = mem.allocation(mem.owner(base).expect("fresh allocation is mapped"));
        self.live.insert(base, a.layout.slots.len() as u64);
        self.audit(mem);
    }

    fn on_free(&mut self, mem: &MemoryImage, base: u64) {
        self.live.remove(&base);
        self.audit(mem);
    }
}

/// Records every computed field address relative to its base.
#[derive(Default)]
pub struct FieldAddrLog {
    /// (offset requested, result - base)
    pub entries: Vec<(u32, u64)>,
}

impl Observer for FieldAddrLog {
    fn on_field_addr(&mut self, _mem: &MemoryImage, base: u64, offset: u32, result: u64) {
        self.entries.push((offset, result.wrapping_sub(base)));
    }
}

/// Fans events out to several observers.
pub struct Tee<'a>(pub Vec<&'a mut dyn Observer>);

impl Observer for Tee<'_> {
    fn on_alloc(&mut self, mem: &MemoryImage, base: u64, site: AllocSiteId) {
        for o in &mut self.0 {
            o.on_alloc(mem, base, site);
        }
    }
    fn on_free(&mut self, mem: &MemoryImage, base: u64) {
        for o in &mut self.0 {
            o.on_free(mem, base);
        }
    }
    fn on_store(&mut self, mem: &MemoryImage, addr: u64, width: u32, def: DefSiteId) {
        for o in &mut self.0 {
            o.on_store(mem, addr, width, def);
        }
    }
    fn on_load(
        &mut self,
        mem: &MemoryImage,
        addr: u64,
        width: u32,
        use_site: UseSiteId,
        observed: &[DefSiteId],
    ) {
        for o in &mut self.0 {
            o.on_load(mem, addr, width, use_site, observed);
        }
    }
    fn on_field_addr(&mut self, mem: &MemoryImage, base: u64, offset: u32, result: u64) {
        for o in &mut self.0 {
            o.on_field_addr(mem, base, offset, result);
        }
    }
}

/// Checks every observed writer against an independently computed legal set.
pub struct LegalityAudit<'t> {
    pub table: &'t LegalDefTable,
    pub checks: u64,
    pub illegal: Vec<String>,
}

impl<'t> LegalityAudit<'t> {
    pub fn new(table: &'t LegalDefTable) -> Self {
        LegalityAudit {
            table,
            checks: 0,
            illegal: Vec::new(),
        }
    }
}

impl Observer for LegalityAudit<'_> {
    fn on_load(
        &mut self,
        _mem: &MemoryImage,
        addr: u64,
        _width: u32,
        use_site: UseSiteId,
        observed: &[DefSiteId],
    ) {
        let legal = self.table.legal(use_site);
        for d in observed {
            self.checks += 1;
            if !legal.contains(&d.0) {
                self.illegal.push(format!(
                    "use u{} at {addr:#x} saw d{} outside {legal:?}",
                    use_site.0, d.0
                ));
            }
        }
    }
}
