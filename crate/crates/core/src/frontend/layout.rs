// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

//! C-conventional object layout and field-slot flattening.
//!
//! A layout assigns every byte of an object to exactly one *field slot*, the
//! unit at which def-use metadata is tracked. Fields are placed in declaration
//! order at naturally aligned offsets, exactly as a C compiler would place
//! them, so enabling protection never moves a field. Padding bytes belong to
//! the slot that precedes them. Arrays are element-insensitive: an array of
//! scalars is one slot, and an array of structs has one slot per leaf field
//! shared by every element. Such a slot then owns several disjoint byte
//! segments.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::types::{StructId, Type, TypeTable, CHAR_SIZE, INT_SIZE, POINTER_SIZE};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LayoutError {
    #[error("struct {0} contains itself by value")]
    RecursiveStruct(String),
    #[error("type `{0}` has no size")]
    Unsized(String),
}

/// A contiguous byte range owned by one slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotSegment {
    pub slot: u32,
    pub offset: u32,
    pub len: u32,
    pub path: String,
}

/// One field-granular metadata unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSlot {
    pub index: u32,
    /// Source path relative to the object, e.g. `a`, `in.x`, `[*].y`; empty
    /// for a scalar or scalar array object.
    pub path: String,
    /// Start offset of the slot within the first array element.
    pub offset: u32,
}

/// Offset of a direct member of a struct.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldOffset {
    pub name: String,
    pub offset: u32,
    pub size: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeLayout {
    pub size: u32,
    pub align: u32,
    /// Disjoint segments sorted by offset, covering `[0, size)`.
    pub segments: Vec<SlotSegment>,
    pub slots: Vec<FieldSlot>,
    /// Direct members, only for struct types.
    pub fields: Vec<FieldOffset>,
}

impl TypeLayout {
    pub fn slot_count(&self) -> u32 {
        self.slots.len() as u32
    }

    /// Slot owning byte `offset`, or `None` when past the object's end.
    pub fn slot_at(&self, offset: u32) -> Option<u32> {
        if offset >= self.size {
            return None;
        }
        let idx = self
            .segments
            .partition_point(|seg| seg.offset + seg.len <= offset);
        self.segments.get(idx).map(|seg| seg.slot)
    }

    /// Like [`slot_at`](Self::slot_at), but bytes past the end belong to the
    /// slot of the final segment.
    pub fn slot_at_or_tail(&self, offset: u32) -> u32 {
        self.slot_at(offset)
            .unwrap_or_else(|| self.segments.last().map_or(0, |s| s.slot))
    }

    /// Slot whose first byte (in element 0) is at `offset`.
    pub fn slot_starting_at(&self, offset: u32) -> Option<u32> {
        self.slots
            .iter()
            .find(|s| s.offset == offset)
            .map(|s| s.index)
    }

    pub fn field(&self, name: &str) -> Option<&FieldOffset> {
        self.fields.iter().find(|f| f.name == name)
    }
}

pub fn compute_layout(table: &TypeTable, ty: &Type) -> Result<TypeLayout, LayoutError> {
    let mut visiting = Vec::new();
    let raw = build(table, ty, &mut visiting)?;
    Ok(raw.finish())
}

/// Leaf slots of a layout in offset order.
pub fn flatten_fields(layout: &TypeLayout) -> Vec<FieldSlot> {
    let mut slots = layout.slots.clone();
    slots.sort_by_key(|s| s.offset);
    slots
}

pub fn align_up(value: u32, align: u32) -> u32 {
    value.div_ceil(align) * align
}

struct RawLayout {
    size: u32,
    align: u32,
    /// (slot, offset, len)
    segments: Vec<(u32, u32, u32)>,
    /// (path, canonical offset)
    slots: Vec<(String, u32)>,
    fields: Vec<FieldOffset>,
}

impl RawLayout {
    fn scalar(size: u32) -> Self {
        RawLayout {
            size,
            align: size,
            segments: vec![(0, 0, size)],
            slots: vec![(String::new(), 0)],
            fields: Vec::new(),
        }
    }

    fn push_segment(&mut self, slot: u32, offset: u32, len: u32) {
        if let Some(last) = self.segments.last_mut() {
            if last.0 == slot && last.1 + last.2 == offset {
                last.2 += len;
                return;
            }
        }
        self.segments.push((slot, offset, len));
    }

    fn pad_to(&mut self, end: u32) {
        if let Some(last) = self.segments.last_mut() {
            let cur = last.1 + last.2;
            if end > cur {
                last.2 += end - cur;
            }
        }
    }

    fn finish(self) -> TypeLayout {
        let slots: Vec<FieldSlot> = self
            .slots
            .into_iter()
            .enumerate()
            .map(|(i, (path, offset))| FieldSlot {
                index: i as u32,
                path,
                offset,
            })
            .collect();
        let segments = self
            .segments
            .into_iter()
            .map(|(slot, offset, len)| SlotSegment {
                slot,
                offset,
                len,
                path: slots[slot as usize].path.clone(),
            })
            .collect();
        TypeLayout {
            size: self.size,
            align: self.align,
            segments,
            slots,
            fields: self.fields,
        }
    }
}

fn join_path(prefix: &str, sub: &str) -> String {
    if sub.is_empty() {
        prefix.to_string()
    } else if sub.starts_with('[') || prefix.is_empty() {
        format!("{prefix}{sub}")
    } else {
        format!("{prefix}.{sub}")
    }
}

fn build(
    table: &TypeTable,
    ty: &Type,
    visiting: &mut Vec<StructId>,
) -> Result<RawLayout, LayoutError> {
    match ty {
        Type::Int => Ok(RawLayout::scalar(INT_SIZE)),
        Type::Char => Ok(RawLayout::scalar(CHAR_SIZE)),
        Type::Pointer(_) => Ok(RawLayout::scalar(POINTER_SIZE)),
        Type::Void => Err(LayoutError::Unsized("void".into())),
        Type::Array(elem, n) => {
            let inner = build(table, elem, visiting)?;
            let mut out = RawLayout {
                size: inner.size * n,
                align: inner.align,
                segments: Vec::new(),
                slots: inner
                    .slots
                    .iter()
                    .map(|(path, off)| {
                        let path = if path.is_empty() {
                            String::new()
                        } else {
                            join_path("[*]", path)
                        };
                        (path, *off)
                    })
                    .collect(),
                fields: Vec::new(),
            };
            for i in 0..*n {
                for &(slot, off, len) in &inner.segments {
                    out.push_segment(slot, i * inner.size + off, len);
                }
            }
            Ok(out)
        }
        Type::Struct(id) => {
            let def = table.get(*id);
            if visiting.contains(id) {
                return Err(LayoutError::RecursiveStruct(def.name.clone()));
            }
            visiting.push(*id);
            let mut out = RawLayout {
                size: 0,
                align: 1,
                segments: Vec::new(),
                slots: Vec::new(),
                fields: Vec::new(),
            };
            let mut cursor = 0u32;
            for field in &def.fields {
                let inner = build(table, &field.ty, visiting)?;
                let offset = align_up(cursor, inner.align);
                out.pad_to(offset);
                let base_slot = out.slots.len() as u32;
                for &(slot, off, len) in &inner.segments {
                    out.push_segment(base_slot + slot, offset + off, len);
                }
                for (path, off) in &inner.slots {
                    out.slots.push((join_path(&field.name, path), offset + off));
                }
                out.fields.push(FieldOffset {
                    name: field.name.clone(),
                    offset,
                    size: inner.size,
                });
                out.align = out.align.max(inner.align);
                cursor = offset + inner.size;
            }
            out.size = align_up(cursor, out.align);
            out.pad_to(out.size);
            visiting.pop();
            Ok(out)
        }
    }
}
