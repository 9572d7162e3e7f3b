// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::{AllocKind, Inst, IrProgram};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteEntry {
    pub id: u32,
    pub function: String,
    pub line: u32,
    pub col: u32,
    /// Source rendering of the written or read lvalue.
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocSiteEntry {
    pub id: u32,
    pub function: String,
    pub line: u32,
    pub col: u32,
    pub kind: AllocKind,
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
    pub size: u32,
    pub slots: Vec<String>,
}

/// Source-level description of every def, use and alloc site.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SiteCatalog {
    pub defs: Vec<SiteEntry>,
    pub uses: Vec<SiteEntry>,
    pub allocs: Vec<AllocSiteEntry>,
}

impl SiteCatalog {
    pub fn def(&self, id: u32) -> Option<&SiteEntry> {
        id.checked_sub(1).and_then(|i| self.defs.get(i as usize))
    }

    pub fn use_site(&self, id: u32) -> Option<&SiteEntry> {
        self.uses.get(id as usize)
    }

    pub fn alloc(&self, id: u32) -> Option<&AllocSiteEntry> {
        self.allocs.get(id as usize)
    }
}

pub fn enumerate_sites(prog: &IrProgram) -> SiteCatalog {
    let mut catalog = SiteCatalog::default();
    for func in &prog.functions {
        for inst in func.insts() {
            match inst {
                Inst::Store {
                    site, pos, target, ..
                } => catalog.defs.push(SiteEntry {
                    id: site.0,
                    function: func.name.clone(),
                    line: pos.line,
                    col: pos.col,
                    target: target.clone(),
                }),
                Inst::Load {
                    site, pos, target, ..
                } => catalog.uses.push(SiteEntry {
                    id: site.0,
                    function: func.name.clone(),
                    line: pos.line,
                    col: pos.col,
                    target: target.clone(),
                }),
                Inst::Alloc { site, .. } => {
                    let info = prog.alloc_site(*site);
                    catalog.allocs.push(AllocSiteEntry {
                        id: site.0,
                        function: info.function.clone(),
                        line: info.pos.line,
                        col: info.pos.col,
                        kind: info.kind,
                        name: info.name.clone(),
                        ty: info.ty.display(&prog.types).to_string(),
                        size: info.layout.size,
                        slots: info.layout.slots.iter().map(|s| s.path.clone()).collect(),
                    })
                }
                _ => {}
            }
        }
    }
    catalog.defs.sort_by_key(|e| e.id);
    catalog.uses.sort_by_key(|e| e.id);
    catalog.allocs.sort_by_key(|e| e.id);
    catalog
}

impl AllocSiteEntry {
    pub fn is_heap(&self) -> bool {
        self.kind == AllocKind::Heap
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{check_source, SourceProgram};
    use crate::ir::lower;

    fn catalog(text: &str) -> SiteCatalog {
        let typed = check_source(&SourceProgram::new("t.mc", text)).unwrap();
        enumerate_sites(&lower(&typed).unwrap())
    }

    #[test]
    fn counts_defs_and_uses() {
        let c = catalog("int x; int y; void main() { x = 1; y = 2; x = y; print(x); }");
        assert_eq!(
            c.defs.iter().map(|d| d.id).collect::<Vec<_>>(),
            vec![1, 2, 3]
        );
        assert_eq!(c.uses.iter().map(|u| u.id).collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(c.def(3).unwrap().target, "x");
        assert_eq!(c.use_site(1).unwrap().target, "x");
        assert!(c.def(0).is_none());
    }

    #[test]
    fn empty_main() {
        let c = catalog("void main() { }");
        assert!(c.defs.is_empty());
        assert!(c.uses.is_empty());
    }

    #[test]
    fn deterministic() {
        let text = "struct S { int a; char b; }; void main() { struct S* p; p = malloc(sizeof(struct S)); p->b = 'x'; print(p->b); }";
        let a = catalog(text);
        let b = catalog(text);
        assert_eq!(a, b);
        let heap = a.allocs.iter().find(|s| s.is_heap()).unwrap();
        assert_eq!(heap.slots, vec!["a", "b"]);
        assert_eq!(heap.size, 8);
    }
}
