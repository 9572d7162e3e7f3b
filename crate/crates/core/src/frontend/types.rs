// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ast::Pos;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StructId(pub u32);

/// A resolved MiniC type.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Type {
    Int,
    Char,
    Void,
    Pointer(Box<Type>),
    Array(Box<Type>, u32),
    Struct(StructId),
}

pub const INT_SIZE: u32 = 4;
pub const CHAR_SIZE: u32 = 1;
pub const POINTER_SIZE: u32 = 8;

impl Type {
    pub fn pointer_to(inner: Type) -> Type {
        Type::Pointer(Box::new(inner))
    }

    pub fn is_integral(&self) -> bool {
        matches!(self, Type::Int | Type::Char)
    }

    pub fn is_pointer(&self) -> bool {
        matches!(self, Type::Pointer(_))
    }

    /// Types that fit in a register and can be loaded or stored as a unit.
    pub fn is_scalar(&self) -> bool {
        matches!(self, Type::Int | Type::Char | Type::Pointer(_))
    }

    pub fn pointee(&self) -> Option<&Type> {
        match self {
            Type::Pointer(inner) => Some(inner),
            _ => None,
        }
    }

    /// Byte width of a scalar access.
    pub fn scalar_size(&self) -> Option<u32> {
        match self {
            Type::Int => Some(INT_SIZE),
            Type::Char => Some(CHAR_SIZE),
            Type::Pointer(_) => Some(POINTER_SIZE),
            _ => None,
        }
    }

    pub fn display<'a>(&'a self, table: &'a TypeTable) -> TypeDisplay<'a> {
        TypeDisplay { ty: self, table }
    }
}

pub struct TypeDisplay<'a> {
    ty: &'a Type,
    table: &'a TypeTable,
}

impl fmt::Display for TypeDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.ty {
            Type::Int => f.write_str("int"),
            Type::Char => f.write_str("char"),
            Type::Void => f.write_str("void"),
            Type::Pointer(inner) => write!(f, "{}*", inner.display(self.table)),
            Type::Array(inner, n) => write!(f, "{}[{n}]", inner.display(self.table)),
            Type::Struct(id) => write!(f, "struct {}", self.table.get(*id).name),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldDef {
    pub name: String,
    pub ty: Type,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructDef {
    pub name: String,
    pub fields: Vec<FieldDef>,
    pub pos: Pos,
}

impl StructDef {
    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.name == name)
    }
}

/// All struct declarations of a program, indexed by [`StructId`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TypeTable {
    structs: Vec<StructDef>,
    by_name: HashMap<String, StructId>,
}

impl TypeTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a struct name; returns `None` if it already exists.
    pub fn declare(&mut self, name: &str, pos: Pos) -> Option<StructId> {
        if self.by_name.contains_key(name) {
            return None;
        }
        let id = StructId(self.structs.len() as u32);
        self.structs.push(StructDef {
            name: name.to_string(),
            fields: Vec::new(),
            pos,
        });
        self.by_name.insert(name.to_string(), id);
        Some(id)
    }

    pub fn set_fields(&mut self, id: StructId, fields: Vec<FieldDef>) {
        self.structs[id.0 as usize].fields = fields;
    }

    pub fn lookup(&self, name: &str) -> Option<StructId> {
        self.by_name.get(name).copied()
    }

    pub fn get(&self, id: StructId) -> &StructDef {
        &self.structs[id.0 as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (StructId, &StructDef)> {
        self.structs
            .iter()
            .enumerate()
            .map(|(i, s)| (StructId(i as u32), s))
    }

    pub fn len(&self) -> usize {
        self.structs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.structs.is_empty()
    }
}
