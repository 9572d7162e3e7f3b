// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::ir::{AllocSiteId, DefSiteId, UseSiteId};

use super::constraints::ConstraintSet;
use super::solver::PointsToSolution;
use super::AbstractLoc;

/// Legal definition set of every use site.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LegalDefTable {
    pub program_hash: String,
    pub strict_init: bool,
    /// Sorted def ids, indexed by use id.
    pub sets: Vec<Vec<u32>>,
}

impl LegalDefTable {
    pub fn legal(&self, use_site: UseSiteId) -> &[u32] {
        &self.sets[use_site.0 as usize]
    }

    /// Sum of all set sizes.
    pub fn total_size(&self) -> usize {
        self.sets.iter().map(Vec::len).sum()
    }

    pub fn use_count(&self) -> usize {
        self.sets.len()
    }

    /// True when every set of `self` contains the corresponding set of `other`.
    pub fn is_superset_of(&self, other: &LegalDefTable) -> bool {
        self.sets.len() == other.sets.len()
            && self
                .sets
                .iter()
                .zip(&other.sets)
                .all(|(mine, theirs)| theirs.iter().all(|d| mine.binary_search(d).is_ok()))
    }
}

/// Slots a def site may write, with whole-object locations expanded.
pub fn abstract_locs_written(
    def: DefSiteId,
    cs: &ConstraintSet,
    sol: &PointsToSolution,
) -> BTreeSet<AbstractLoc> {
    let addr = cs.def_addrs[def.0 as usize - 1];
    sol.points_to(&addr)
        .iter()
        .flat_map(|l| cs.expand(*l))
        .collect()
}

/// Slots a use site may read, with whole-object locations expanded.
pub fn abstract_locs_read(
    use_site: UseSiteId,
    cs: &ConstraintSet,
    sol: &PointsToSolution,
) -> BTreeSet<AbstractLoc> {
    let addr = cs.use_addrs[use_site.0 as usize];
    sol.points_to(&addr)
        .iter()
        .flat_map(|l| cs.expand(*l))
        .collect()
}

/// `legal(u) = { d | written(d) ∩ read(u) ≠ ∅ }`, plus the initial def 0
/// unless `strict_init`.
pub fn compute_legal_defs(
    program_hash: &str,
    cs: &ConstraintSet,
    sol: &PointsToSolution,
    strict_init: bool,
) -> LegalDefTable {
    let mut writers: BTreeMap<AbstractLoc, Vec<u32>> = BTreeMap::new();
    for d in 1..=cs.def_addrs.len() as u32 {
        for loc in abstract_locs_written(DefSiteId(d), cs, sol) {
            writers.entry(loc).or_default().push(d);
        }
    }
    let sets = (0..cs.use_addrs.len() as u32)
        .map(|u| {
            let mut set: BTreeSet<u32> = BTreeSet::new();
            if !strict_init {
                set.insert(DefSiteId::INITIAL.0);
            }
            for loc in abstract_locs_read(UseSiteId(u), cs, sol) {
                if let Some(ds) = writers.get(&loc) {
                    set.extend(ds.iter().copied());
                }
            }
            set.into_iter().collect()
        })
        .collect();
    LegalDefTable {
        program_hash: program_hash.to_string(),
        strict_init,
        sets,
    }
}

/// The same relation at whole-object granularity: every location is widened
/// to its allocation site before intersecting.
pub fn field_insensitive_projection(
    program_hash: &str,
    cs: &ConstraintSet,
    sol: &PointsToSolution,
    strict_init: bool,
) -> LegalDefTable {
    let objects = |locs: BTreeSet<AbstractLoc>| -> BTreeSet<AllocSiteId> {
        locs.into_iter().map(|l| l.alloc).collect()
    };
    let mut writers: BTreeMap<AllocSiteId, Vec<u32>> = BTreeMap::new();
    for d in 1..=cs.def_addrs.len() as u32 {
        for obj in objects(abstract_locs_written(DefSiteId(d), cs, sol)) {
            writers.entry(obj).or_default().push(d);
        }
    }
    let sets = (0..cs.use_addrs.len() as u32)
        .map(|u| {
            let mut set: BTreeSet<u32> = BTreeSet::new();
            if !strict_init {
                set.insert(DefSiteId::INITIAL.0);
            }
            for obj in objects(abstract_locs_read(UseSiteId(u), cs, sol)) {
                if let Some(ds) = writers.get(&obj) {
                    set.extend(ds.iter().copied());
                }
            }
            set.into_iter().collect()
        })
        .collect();
    LegalDefTable {
        program_hash: program_hash.to_string(),
        strict_init,
        sets,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{check_source, SourceProgram};
    use crate::ir::lower;
    use crate::vfa::{build_constraints, solve_points_to};

    struct Run {
        cs: ConstraintSet,
        sol: PointsToSolution,
    }

    fn run(text: &str) -> Run {
        let p = lower(&check_source(&SourceProgram::new("t.mc", text)).unwrap()).unwrap();
        let cs = build_constraints(&p);
        let sol = solve_points_to(&cs);
        Run { cs, sol }
    }

    impl Run {
        fn fs(&self) -> LegalDefTable {
            compute_legal_defs("h", &self.cs, &self.sol, false)
        }
        fn fi(&self) -> LegalDefTable {
            field_insensitive_projection("h", &self.cs, &self.sol, false)
        }
    }

    const OVERFLOW: &str = "struct S { int a[4]; int k; };\n\
        void main(int i, int v) { struct S s; s.a[i] = v; s.k = 7; print(s.k); }";

    #[test]
    fn repeated_writes_to_a_scalar() {
        let r = run("int x; void main() { x = 1; x = 2; print(x); }");
        assert_eq!(r.fs().sets, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn field_sensitivity_excludes_the_array_store() {
        let r = run(OVERFLOW);
        let t = r.fs();
        // defs: d1 = param i, d2 = param v, d3 = s.a[i], d4 = s.k
        // uses: u0 = i, u1 = v, u2 = s.k
        assert_eq!(t.sets[2], vec![0, 4]);
        assert_eq!(t.sets[0], vec![0, 1]);
    }

    #[test]
    fn field_insensitive_admits_the_array_store() {
        let r = run(OVERFLOW);
        let t = r.fi();
        assert_eq!(t.sets[2], vec![0, 3, 4]);
        assert!(t.is_superset_of(&r.fs()));
        assert!(!r.fs().is_superset_of(&t));
    }

    #[test]
    fn no_stores_means_only_initial() {
        let r = run("int x; int y; void main() { print(x + y); }");
        assert_eq!(r.fs().sets, vec![vec![0], vec![0]]);
    }

    #[test]
    fn strict_init_drops_the_initial_def() {
        let r = run("int x; void main() { x = 1; print(x); }");
        let t = compute_legal_defs("h", &r.cs, &r.sol, true);
        assert_eq!(t.sets, vec![vec![1]]);
        assert!(t.strict_init);
    }

    #[test]
    fn scalar_only_program_is_unchanged_by_projection() {
        let r = run("void main(int n) { int x; int y; int* p; p = &x; if (n) p = &y; *p = n; print(x + y); }");
        assert_eq!(r.fs(), r.fi());
    }

    #[test]
    fn nested_struct_sets_strictly_grow() {
        let r = run(
            "struct In { int x; int y; }; struct Out { struct In a; int z; };\n\
             void main() { struct Out o; o.a.x = 1; o.a.y = 2; o.z = 3; print(o.a.x + o.a.y + o.z); }",
        );
        let (fs, fi) = (r.fs(), r.fi());
        assert_eq!(fs.sets, vec![vec![0, 1], vec![0, 2], vec![0, 3]]);
        assert!(fi.sets.iter().all(|s| *s == vec![0, 1, 2, 3]));
        assert!(fi.total_size() > fs.total_size());
    }

    #[test]
    fn heap_read_through_pointer() {
        let r = run(
            "struct H { int a; int b; int c; };\n\
             void main() { struct H* h; int* q; h = malloc(sizeof(struct H)); h->a = 1; h->c = 3; q = &h->c; print(*q); }",
        );
        let heap = AllocSiteId(2);
        // u0..u2 load h, u3 loads q, u4 loads *q
        let read = abstract_locs_read(UseSiteId(4), &r.cs, &r.sol);
        assert_eq!(read, BTreeSet::from([AbstractLoc::new(heap, 2)]));
        let fs = r.fs();
        // d1 h = malloc, d2 h->a, d3 h->c, d4 q
        assert_eq!(fs.sets[4], vec![0, 3]);
    }
}
