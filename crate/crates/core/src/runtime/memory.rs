// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

//! Size-class arena.
//!
//! The arena is split into one power-of-two region per size class, and each
//! region into chunks of its class size. Region bases are aligned to the
//! region size, so the chunk owning any address is found by masking. Objects
//! keep their exact C layout inside a chunk; the rest of the chunk is slack.

use std::sync::Arc;

use thiserror::Error;

use crate::frontend::TypeLayout;
use crate::ir::{AllocSiteId, DefSiteId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArenaConfig {
    pub arena_size: u64,
    pub min_class: u64,
    pub max_class: u64,
}

impl Default for ArenaConfig {
    fn default() -> Self {
        ArenaConfig {
            arena_size: 1 << 20,
            min_class: 16,
            max_class: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("arena size {0} is not a power of two of at least 64 KiB")]
    ArenaSize(u64),
    #[error("size classes {0}..{1} are not powers of two in increasing order")]
    Classes(u64, u64),
    #[error("arena of {arena} bytes cannot hold one chunk of every class up to {max_class}")]
    TooSmall { arena: u64, max_class: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AllocFailure {
    #[error("object of {0} bytes exceeds the largest size class")]
    TooLarge(u64),
    #[error("size class {0} is exhausted")]
    Exhausted(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FreeError {
    #[error("double free of {0:#x}")]
    DoubleFree(u64),
    #[error("free of interior address {0:#x}")]
    Interior(u64),
    #[error("free of unallocated address {0:#x}")]
    Unknown(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("access to unmapped address {0:#x}")]
pub struct Unmapped(pub u64);

/// Index into [`MemoryImage::allocations`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AllocId(pub u32);

/// How an object stopped being live.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Release {
    Free { line: u32, col: u32 },
    FrameExit { function: String },
}

#[derive(Debug, Clone)]
pub struct Allocation {
    pub base: u64,
    /// Object size in bytes; `layout.size * count`.
    pub size: u64,
    pub chunk_size: u64,
    pub site: AllocSiteId,
    pub layout: Arc<TypeLayout>,
    pub live: bool,
    /// Last writer of every slot.
    pub shadow: Vec<u32>,
    pub released: Option<Release>,
}

impl Allocation {
    /// Slot owning byte `offset` of the chunk.
    pub fn slot_at(&self, offset: u64) -> u32 {
        let elem = self.layout.size as u64;
        if offset < self.size && elem > 0 {
            self.layout.slot_at_or_tail((offset % elem) as u32)
        } else {
            self.layout.slot_at_or_tail(self.layout.size)
        }
    }
}

/// One slot touched by an access.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResolvedSlot {
    pub alloc: AllocId,
    pub slot: u32,
    /// First accessed address inside this slot.
    pub addr: u64,
}

#[derive(Debug, Clone)]
struct ClassRegion {
    shift: u32,
    base: u64,
    /// Chunks handed out so far by the bump cursor.
    used: u64,
    capacity: u64,
    free: Vec<u64>,
    owners: Vec<AllocId>,
}

#[derive(Debug, Clone)]
pub struct MemoryImage {
    config: ArenaConfig,
    base: u64,
    region_shift: u32,
    regions: Vec<ClassRegion>,
    bytes: Vec<u8>,
    allocations: Vec<Allocation>,
    live_slots: u64,
    live_bytes: u64,
    peak_live_slots: u64,
    peak_live_bytes: u64,
}

pub fn init_memory(config: ArenaConfig) -> Result<MemoryImage, ConfigError> {
    let ArenaConfig {
        arena_size,
        min_class,
        max_class,
    } = config;
    if !arena_size.is_power_of_two() || arena_size < 64 * 1024 {
        return Err(ConfigError::ArenaSize(arena_size));
    }
    if !min_class.is_power_of_two() || !max_class.is_power_of_two() || min_class > max_class {
        return Err(ConfigError::Classes(min_class, max_class));
    }
    let nclasses = (max_class.trailing_zeros() - min_class.trailing_zeros() + 1) as u64;
    let region_size = 1u64 << (63 - (arena_size / nclasses).leading_zeros());
    if region_size < max_class {
        return Err(ConfigError::TooSmall {
            arena: arena_size,
            max_class,
        });
    }
    // Keep address 0 and small integers unmapped.
    let base = arena_size;
    let regions = (0..nclasses)
        .map(|k| {
            let class = min_class << k;
            ClassRegion {
                shift: class.trailing_zeros(),
                base: base + k * region_size,
                used: 0,
                capacity: region_size / class,
                free: Vec::new(),
                owners: Vec::new(),
            }
        })
        .collect();
    Ok(MemoryImage {
        config,
        base,
        region_shift: region_size.trailing_zeros(),
        regions,
        bytes: vec![0; (nclasses * region_size) as usize],
        allocations: Vec::new(),
        live_slots: 0,
        live_bytes: 0,
        peak_live_slots: 0,
        peak_live_bytes: 0,
    })
}

impl MemoryImage {
    pub fn config(&self) -> ArenaConfig {
        self.config
    }

    /// Lowest arena address.
    pub fn arena_base(&self) -> u64 {
        self.base
    }

    pub fn arena_end(&self) -> u64 {
        self.base + self.bytes.len() as u64
    }

    /// Allocates `count` consecutive objects of `layout`. The chunk is zeroed
    /// and every slot starts out as the initial def.
    pub fn allocate(
        &mut self,
        layout: Arc<TypeLayout>,
        count: u64,
        site: AllocSiteId,
    ) -> Result<u64, AllocFailure> {
        let size = (layout.size as u64)
            .checked_mul(count)
            .ok_or(AllocFailure::TooLarge(u64::MAX))?;
        let class = size.max(self.config.min_class).next_power_of_two();
        if class > self.config.max_class {
            return Err(AllocFailure::TooLarge(size));
        }
        let k = (class.trailing_zeros() - self.config.min_class.trailing_zeros()) as usize;
        let id = AllocId(self.allocations.len() as u32);
        let region = &mut self.regions[k];
        let index = match region.free.pop() {
            Some(i) => {
                region.owners[i as usize] = id;
                i
            }
            None if region.used < region.capacity => {
                region.used += 1;
                region.owners.push(id);
                region.used - 1
            }
            None => return Err(AllocFailure::Exhausted(class)),
        };
        let base = region.base + (index << region.shift);
        let start = (base - self.base) as usize;
        self.bytes[start..start + class as usize].fill(0);
        let slots = layout.slot_count() as u64;
        self.allocations.push(Allocation {
            base,
            size,
            chunk_size: class,
            site,
            shadow: vec![DefSiteId::INITIAL.0; slots as usize],
            layout,
            live: true,
            released: None,
        });
        self.live_slots += slots;
        self.live_bytes += size;
        self.peak_live_slots = self.peak_live_slots.max(self.live_slots);
        self.peak_live_bytes = self.peak_live_bytes.max(self.live_bytes);
        Ok(base)
    }

    /// Releases the object at `base`. Its bytes are kept and its slots read as
    /// released until the chunk is reused.
    pub fn deallocate(&mut self, base: u64, how: Release) -> Result<AllocId, FreeError> {
        let id = self.owner(base).ok_or(FreeError::Unknown(base))?;
        let alloc = &mut self.allocations[id.0 as usize];
        if alloc.base != base {
            return Err(FreeError::Interior(base));
        }
        if !alloc.live {
            return Err(FreeError::DoubleFree(base));
        }
        alloc.live = false;
        alloc.shadow.fill(DefSiteId::RELEASED.0);
        alloc.released = Some(how);
        self.live_slots -= alloc.shadow.len() as u64;
        self.live_bytes -= alloc.size;
        let (k, index) = self.chunk_of(base).expect("owned address is mapped");
        self.regions[k].free.push(index);
        Ok(id)
    }

    /// (region, chunk index) of an address, by masking.
    fn chunk_of(&self, addr: u64) -> Option<(usize, u64)> {
        if addr < self.base || addr >= self.arena_end() {
            return None;
        }
        let k = ((addr - self.base) >> self.region_shift) as usize;
        let region = &self.regions[k];
        let index = (addr - region.base) >> region.shift;
        (index < region.used).then_some((k, index))
    }

    /// Most recent allocation made in the chunk holding `addr`.
    pub fn owner(&self, addr: u64) -> Option<AllocId> {
        self.chunk_of(addr)
            .map(|(k, index)| self.regions[k].owners[index as usize])
    }

    /// Reference lookup by scanning every allocation record.
    pub fn owner_linear(&self, addr: u64) -> Option<AllocId> {
        self.allocations
            .iter()
            .enumerate()
            .rev()
            .find(|(_, a)| addr >= a.base && addr < a.base + a.chunk_size)
            .map(|(i, _)| AllocId(i as u32))
    }

    /// Slots covering `[addr, addr + len)` in address order, each listed once
    /// per contiguous run. Bytes in never-allocated chunks fail.
    pub fn resolve_slots(&self, addr: u64, len: u32) -> Result<Vec<ResolvedSlot>, Unmapped> {
        let mut out: Vec<ResolvedSlot> = Vec::with_capacity(1);
        for a in addr..addr.saturating_add(len as u64) {
            let id = self.owner(a).ok_or(Unmapped(a))?;
            let alloc = &self.allocations[id.0 as usize];
            let slot = alloc.slot_at(a - alloc.base);
            if out.last().is_some_and(|r| r.alloc == id && r.slot == slot) {
                continue;
            }
            out.push(ResolvedSlot {
                alloc: id,
                slot,
                addr: a,
            });
        }
        Ok(out)
    }

    /// Reads `width` bytes as a little-endian integer, sign-extending widths
    /// below 8. The range must have been resolved.
    pub fn read(&self, addr: u64, width: u32) -> i64 {
        let start = (addr - self.base) as usize;
        let raw = &self.bytes[start..start + width as usize];
        match width {
            1 => raw[0] as i8 as i64,
            4 => i32::from_le_bytes(raw.try_into().unwrap()) as i64,
            8 => i64::from_le_bytes(raw.try_into().unwrap()),
            _ => {
                let mut buf = [0u8; 8];
                buf[..raw.len()].copy_from_slice(raw);
                i64::from_le_bytes(buf)
            }
        }
    }

    /// Writes the low `width` bytes of `value`. The range must have been
    /// resolved.
    pub fn write(&mut self, addr: u64, width: u32, value: i64) {
        let start = (addr - self.base) as usize;
        self.bytes[start..start + width as usize]
            .copy_from_slice(&value.to_le_bytes()[..width as usize]);
    }

    pub fn allocation(&self, id: AllocId) -> &Allocation {
        &self.allocations[id.0 as usize]
    }

    pub(crate) fn allocation_mut(&mut self, id: AllocId) -> &mut Allocation {
        &mut self.allocations[id.0 as usize]
    }

    /// Every allocation ever made, in allocation order.
    pub fn allocations(&self) -> &[Allocation] {
        &self.allocations
    }

    pub fn live_slots(&self) -> u64 {
        self.live_slots
    }

    /// Live slots recomputed from the allocation records.
    pub fn recount_live_slots(&self) -> u64 {
        self.allocations
            .iter()
            .filter(|a| a.live)
            .map(|a| a.layout.slot_count() as u64)
            .sum()
    }

    pub fn live_bytes(&self) -> u64 {
        self.live_bytes
    }

    pub fn peak_live_slots(&self) -> u64 {
        self.peak_live_slots
    }

    pub fn peak_live_bytes(&self) -> u64 {
        self.peak_live_bytes
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{check_source, compute_layout, SourceProgram, StructId, Type};

    fn s_layout() -> Arc<TypeLayout> {
        let p = check_source(&SourceProgram::new(
            "t.mc",
            "struct S { int a[4]; int k; }; void main() { }",
        ))
        .unwrap();
        Arc::new(p.struct_layout(StructId(0)).clone())
    }

    fn int_layout() -> Arc<TypeLayout> {
        let p = check_source(&SourceProgram::new("t.mc", "void main() { }")).unwrap();
        Arc::new(compute_layout(&p.types, &Type::Int).unwrap())
    }

    fn mem() -> MemoryImage {
        init_memory(ArenaConfig::default()).unwrap()
    }

    #[test]
    fn config_errors() {
        let bad = |arena_size, min_class, max_class| {
            init_memory(ArenaConfig {
                arena_size,
                min_class,
                max_class,
            })
            .is_err()
        };
        assert!(bad(0, 16, 4096));
        assert!(bad(3 << 16, 16, 4096));
        assert!(bad(1 << 15, 16, 4096));
        assert!(bad(1 << 20, 24, 4096));
        assert!(bad(1 << 20, 4096, 16));
        assert!(!bad(1 << 16, 16, 4096));
    }

    #[test]
    fn struct_goes_to_class_32() {
        let mut m = mem();
        let b = m.allocate(s_layout(), 1, AllocSiteId(0)).unwrap();
        assert_eq!(b % 32, 0);
        assert_eq!(m.allocation(m.owner(b).unwrap()).chunk_size, 32);
    }

    #[test]
    fn bump_allocations_are_adjacent() {
        let mut m = mem();
        let b1 = m.allocate(s_layout(), 1, AllocSiteId(0)).unwrap();
        let b2 = m.allocate(s_layout(), 1, AllocSiteId(1)).unwrap();
        assert_eq!(b2 - b1, 32);
    }

    #[test]
    fn reuse_after_free_resets_shadow() {
        let mut m = mem();
        let b = m.allocate(s_layout(), 1, AllocSiteId(0)).unwrap();
        let id = m.owner(b).unwrap();
        m.allocation_mut(id).shadow[1] = 7;
        m.deallocate(
            b,
            Release::FrameExit {
                function: "f".into(),
            },
        )
        .unwrap();
        assert_eq!(m.allocation(id).shadow, vec![DefSiteId::RELEASED.0; 2]);
        let again = m.allocate(s_layout(), 1, AllocSiteId(0)).unwrap();
        assert_eq!(again, b);
        let fresh = m.owner(b).unwrap();
        assert_ne!(fresh, id);
        assert_eq!(m.allocation(fresh).shadow, vec![0, 0]);
    }

    #[test]
    fn free_errors() {
        let mut m = mem();
        let b = m.allocate(s_layout(), 1, AllocSiteId(0)).unwrap();
        let how = || Release::Free { line: 1, col: 1 };
        assert_eq!(m.deallocate(b + 4, how()), Err(FreeError::Interior(b + 4)));
        m.deallocate(b, how()).unwrap();
        assert_eq!(m.deallocate(b, how()), Err(FreeError::DoubleFree(b)));
        assert_eq!(m.deallocate(8, how()), Err(FreeError::Unknown(8)));
    }

    #[test]
    fn resolve_field_and_spanning_access() {
        let mut m = mem();
        let b = m.allocate(s_layout(), 1, AllocSiteId(0)).unwrap();
        let slots = |a, l| -> Vec<u32> {
            m.resolve_slots(a, l)
                .unwrap()
                .iter()
                .map(|r| r.slot)
                .collect()
        };
        assert_eq!(slots(b + 16, 4), vec![1]);
        assert_eq!(slots(b + 12, 8), vec![0, 1]);
        // slack past the object belongs to the last slot
        assert_eq!(slots(b + 24, 4), vec![1]);
        assert_eq!(m.resolve_slots(b + 32, 4), Err(Unmapped(b + 32)));
        assert_eq!(m.resolve_slots(0, 4), Err(Unmapped(0)));
    }

    #[test]
    fn overflow_reaches_the_neighbour() {
        let mut m = mem();
        let a = m.allocate(int_layout(), 4, AllocSiteId(0)).unwrap();
        let b = m.allocate(int_layout(), 4, AllocSiteId(1)).unwrap();
        assert_eq!(b - a, 16);
        let r = m.resolve_slots(a + 16, 4).unwrap();
        assert_eq!(r[0].alloc, m.owner(b).unwrap());
    }

    #[test]
    fn heap_array_slots_repeat_per_element() {
        let mut m = mem();
        let b = m.allocate(s_layout(), 3, AllocSiteId(0)).unwrap();
        let id = m.owner(b).unwrap();
        assert_eq!(m.allocation(id).size, 60);
        assert_eq!(m.allocation(id).chunk_size, 64);
        assert_eq!(m.allocation(id).shadow.len(), 2);
        assert_eq!(m.resolve_slots(b + 20 + 16, 4).unwrap()[0].slot, 1);
        assert_eq!(m.resolve_slots(b + 40, 4).unwrap()[0].slot, 0);
    }

    #[test]
    fn too_large_and_exhausted() {
        let mut m = init_memory(ArenaConfig {
            arena_size: 1 << 16,
            min_class: 16,
            max_class: 4096,
        })
        .unwrap();
        assert_eq!(
            m.allocate(int_layout(), 2000, AllocSiteId(0)),
            Err(AllocFailure::TooLarge(8000))
        );
        let mut n = 0;
        while m.allocate(int_layout(), 1000, AllocSiteId(0)).is_ok() {
            n += 1;
        }
        assert!(n >= 1);
        assert_eq!(
            m.allocate(int_layout(), 1000, AllocSiteId(0)),
            Err(AllocFailure::Exhausted(4096))
        );
    }

    #[test]
    fn reads_sign_extend() {
        let mut m = mem();
        let b = m.allocate(int_layout(), 2, AllocSiteId(0)).unwrap();
        m.write(b, 4, -5);
        assert_eq!(m.read(b, 4), -5);
        m.write(b + 4, 1, 200);
        assert_eq!(m.read(b + 4, 1), -56);
        m.write(b, 8, 0x1234_5678_9abc);
        assert_eq!(m.read(b, 8), 0x1234_5678_9abc);
    }

    #[test]
    fn live_slot_accounting() {
        let mut m = mem();
        let a = m.allocate(s_layout(), 1, AllocSiteId(0)).unwrap();
        m.allocate(int_layout(), 1, AllocSiteId(1)).unwrap();
        assert_eq!(m.live_slots(), 3);
        m.deallocate(a, Release::Free { line: 1, col: 1 }).unwrap();
        assert_eq!(m.live_slots(), 1);
        assert_eq!(m.recount_live_slots(), 1);
        assert_eq!(m.peak_live_slots(), 3);
        assert_eq!(m.peak_live_bytes(), 24);
    }
}
