// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

//! Reference implementations of the static analysis, written for obviousness
//! rather than speed.

use std::collections::{BTreeMap, BTreeSet};

use fsdfi_core::ir::{AllocSiteId, DefSiteId};
use fsdfi_core::vfa::{
    AbstractLoc, Constraint, ConstraintSet, LegalDefTable, Node, PointsToSolution, SlotRef,
};

type Sets = BTreeMap<Node, BTreeSet<AbstractLoc>>;

fn shift(cs: &ConstraintSet, loc: AbstractLoc, offset: u32) -> AbstractLoc {
    let SlotRef::Slot(s) = loc.slot else {
        return loc;
    };
    let offsets = &cs.slot_offsets[loc.alloc.0 as usize];
    let want = offsets[s as usize] + offset;
    for (k, o) in offsets.iter().enumerate() {
        if *o == want {
            return AbstractLoc::new(loc.alloc, k as u32);
        }
    }
    AbstractLoc::top(loc.alloc)
}

fn concrete(cs: &ConstraintSet, loc: AbstractLoc) -> Vec<AbstractLoc> {
    match loc.slot {
        SlotRef::Slot(_) => vec![loc],
        SlotRef::Top => (0..cs.slot_offsets[loc.alloc.0 as usize].len() as u32)
            .map(|s| AbstractLoc::new(loc.alloc, s))
            .collect(),
    }
}

fn get(sets: &Sets, n: &Node) -> BTreeSet<AbstractLoc> {
    sets.get(n).cloned().unwrap_or_default()
}

fn add_all(sets: &mut Sets, n: Node, locs: impl IntoIterator<Item = AbstractLoc>) -> bool {
    let entry = sets.entry(n).or_default();
    let before = entry.len();
    entry.extend(locs);
    entry.len() != before
}

/// Applies every constraint in turn until a full pass changes nothing.
pub fn naive_points_to(cs: &ConstraintSet) -> PointsToSolution {
    let mut sets = Sets::new();
    loop {
        let mut changed = false;
        for c in &cs.constraints {
            changed |= match c {
                Constraint::AddrOf { dst, loc } => add_all(&mut sets, *dst, [*loc]),
                Constraint::Copy { dst, src } => {
                    let s = get(&sets, src);
                    add_all(&mut sets, *dst, s)
                }
                Constraint::Field { dst, src, offset } => {
                    let s: Vec<_> = get(&sets, src)
                        .into_iter()
                        .map(|l| shift(cs, l, *offset))
                        .collect();
                    add_all(&mut sets, *dst, s)
                }
                Constraint::Load { dst, ptr } => {
                    let mut any = false;
                    for l in get(&sets, ptr) {
                        for m in concrete(cs, l) {
                            let s = get(&sets, &Node::Mem(m));
                            any |= add_all(&mut sets, *dst, s);
                        }
                    }
                    any
                }
                Constraint::Store { ptr, src } => {
                    let mut any = false;
                    let s = get(&sets, src);
                    for l in get(&sets, ptr) {
                        for m in concrete(cs, l) {
                            any |= add_all(&mut sets, Node::Mem(m), s.iter().copied());
                        }
                    }
                    any
                }
            };
        }
        if !changed {
            return PointsToSolution::from_sets(sets);
        }
    }
}

fn concrete_targets(
    cs: &ConstraintSet,
    sol: &PointsToSolution,
    addr: &Node,
) -> BTreeSet<AbstractLoc> {
    sol.points_to(addr)
        .iter()
        .flat_map(|l| concrete(cs, *l))
        .collect()
}

/// Tests every (use, def) pair for a shared slot.
pub fn brute_force_legal(
    hash: &str,
    cs: &ConstraintSet,
    sol: &PointsToSolution,
    strict_init: bool,
) -> LegalDefTable {
    pairwise(hash, cs, sol, strict_init, |w, r| !w.is_disjoint(r))
}

/// Tests every (use, def) pair for a shared allocation site.
pub fn brute_force_insensitive(
    hash: &str,
    cs: &ConstraintSet,
    sol: &PointsToSolution,
    strict_init: bool,
) -> LegalDefTable {
    pairwise(hash, cs, sol, strict_init, |w, r| {
        let objs: BTreeSet<AllocSiteId> = w.iter().map(|l| l.alloc).collect();
        r.iter().any(|l| objs.contains(&l.alloc))
    })
}

fn pairwise(
    hash: &str,
    cs: &ConstraintSet,
    sol: &PointsToSolution,
    strict_init: bool,
    overlaps: impl Fn(&BTreeSet<AbstractLoc>, &BTreeSet<AbstractLoc>) -> bool,
) -> LegalDefTable {
    let written: Vec<BTreeSet<AbstractLoc>> = cs
        .def_addrs
        .iter()
        .map(|a| concrete_targets(cs, sol, a))
        .collect();
    let sets = cs
        .use_addrs
        .iter()
        .map(|a| {
            let read = concrete_targets(cs, sol, a);
            let mut set = Vec::new();
            if !strict_init {
                set.push(DefSiteId::INITIAL.0);
            }
            for (i, w) in written.iter().enumerate() {
                if overlaps(w, &read) {
                    set.push(i as u32 + 1);
                }
            }
            set
        })
        .collect();
    LegalDefTable {
        program_hash: hash.to_string(),
        strict_init,
        sets,
    }
}
