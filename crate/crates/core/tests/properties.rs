// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;
use std::sync::Arc;

use fsdfi_core::frontend::{compute_layout, Type, TypeTable};
use fsdfi_core::ir::{AllocSiteId, DefSiteId, UseSiteId};
use fsdfi_core::runtime::{init_memory, ArenaConfig, Mode, Outcome, Release};
use fsdfi_core::vfa::{compress_sets, LegalDefTable};
use fsdfi_testkit::gen::random_program;
use fsdfi_testkit::{compile, run, typed};
use proptest::prelude::*;

fn table_strategy() -> impl Strategy<Value = LegalDefTable> {
    (
        any::<bool>(),
        prop::collection::vec(prop::collection::btree_set(0u32..12, 0..5), 0..40),
    )
        .prop_map(|(strict, sets)| LegalDefTable {
            program_hash: "h".into(),
            strict_init: strict,
            sets: sets
                .into_iter()
                .map(|s| {
                    let mut s: BTreeSet<u32> = s;
                    if strict {
                        s.remove(&0);
                    } else {
                        s.insert(0);
                    }
                    s.into_iter().collect()
                })
                .collect(),
        })
}

#[derive(Debug, Clone)]
enum Op {
    Alloc(u64),
    Free(usize),
}

fn ops() -> impl Strategy<Value = Vec<Op>> {
    prop::collection::vec(
        prop_oneof![
            3 => (1u64..300).prop_map(Op::Alloc),
            2 => any::<prop::sample::Index>().prop_map(|i| Op::Free(i.index(usize::MAX))),
        ],
        1..120,
    )
}

#[derive(Debug, Clone)]
enum Field {
    Int,
    Char,
    Ptr,
    IntArr(u8),
    CharArr(u8),
    Prev,
}

fn struct_fields() -> impl Strategy<Value = Vec<Vec<Field>>> {
    let field = prop_oneof![
        Just(Field::Int),
        Just(Field::Char),
        Just(Field::Ptr),
        (1u8..5).prop_map(Field::IntArr),
        (1u8..7).prop_map(Field::CharArr),
        Just(Field::Prev),
    ];
    prop::collection::vec(prop::collection::vec(field, 1..6), 1..4)
}

fn struct_source(structs: &[Vec<Field>]) -> String {
    let mut out = String::new();
    for (i, fields) in structs.iter().enumerate() {
        out.push_str(&format!("struct T{i} {{ "));
        for (j, f) in fields.iter().enumerate() {
            let decl = match f {
                Field::Int => format!("int f{j};"),
                Field::Char => format!("char f{j};"),
                Field::Ptr => format!("int* f{j};"),
                Field::IntArr(n) => format!("int f{j}[{n}];"),
                Field::CharArr(n) => format!("char f{j}[{n}];"),
                Field::Prev if i > 0 => format!("struct T{} f{j}[2];", i - 1),
                Field::Prev => format!("char f{j};"),
            };
            out.push_str(&decl);
            out.push(' ');
        }
        out.push_str("};\n");
    }
    out.push_str("void main() { }\n");
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn compression_round_trips(table in table_strategy()) {
        let c = compress_sets(&table);
        prop_assert_eq!(c.decompress(), table.clone());
        let distinct: BTreeSet<&Vec<u32>> = table.sets.iter().collect();
        prop_assert_eq!(c.distinct_sets(), distinct.len());
        prop_assert_eq!(
            c.stored_entries(),
            distinct.iter().map(|s| s.len()).sum::<usize>() + table.sets.len()
        );
        for (u, set) in table.sets.iter().enumerate() {
            for d in 0..12 {
                prop_assert_eq!(
                    c.contains(UseSiteId(u as u32), DefSiteId(d)),
                    set.contains(&d)
                );
            }
        }
        // Set ids follow first appearance.
        let mut next = 0;
        for &id in &c.use_to_set {
            prop_assert!(id <= next);
            if id == next {
                next += 1;
            }
        }
    }

    #[test]
    fn mask_lookup_matches_linear_scan(ops in ops(), probes in prop::collection::vec(any::<u64>(), 32)) {
        let layout = Arc::new(compute_layout(&TypeTable::new(), &Type::Int).unwrap());
        let mut mem = init_memory(ArenaConfig::default()).unwrap();
        let mut live: Vec<u64> = Vec::new();
        let mut slots = 0u64;
        for op in ops {
            match op {
                Op::Alloc(n) => {
                    if let Ok(base) = mem.allocate(layout.clone(), n, AllocSiteId(0)) {
                        live.push(base);
                        slots += 1;
                    }
                }
                Op::Free(i) if !live.is_empty() => {
                    let base = live.swap_remove(i % live.len());
                    mem.deallocate(base, Release::FrameExit { function: "f".into() }).unwrap();
                    slots -= 1;
                }
                Op::Free(_) => {}
            }
            prop_assert_eq!(mem.live_slots(), slots);
            prop_assert_eq!(mem.recount_live_slots(), slots);
        }
        let span = mem.arena_end() - mem.arena_base();
        let addrs = live
            .iter()
            .flat_map(|b| [*b, b + 3, b.wrapping_sub(1)])
            .chain(probes.iter().map(|p| mem.arena_base() + p % span))
            .chain([0, mem.arena_base() - 1, mem.arena_end()]);
        for a in addrs {
            prop_assert_eq!(mem.owner(a), mem.owner_linear(a), "address {:#x}", a);
        }
        for b in &live {
            let id = mem.owner(*b).unwrap();
            prop_assert!(mem.allocation(id).live);
            prop_assert_eq!(mem.allocation(id).base, *b);
        }
    }

    #[test]
    fn segments_partition_every_struct(structs in struct_fields()) {
        let text = struct_source(&structs);
        let prog = typed(&text);
        for layout in &prog.struct_layouts {
            let mut at = 0;
            for seg in &layout.segments {
                prop_assert_eq!(seg.offset, at);
                prop_assert!(seg.len > 0);
                prop_assert!((seg.slot as usize) < layout.slots.len());
                at += seg.len;
            }
            prop_assert_eq!(at, layout.size);
            prop_assert_eq!(layout.size % layout.align, 0);
            for w in layout.fields.windows(2) {
                prop_assert!(w[0].offset + w[0].size <= w[1].offset);
            }
            if let Some(last) = layout.fields.last() {
                prop_assert!(last.offset + last.size <= layout.size);
            }
            // Every slot owns at least one segment.
            let owned: BTreeSet<u32> = layout.segments.iter().map(|s| s.slot).collect();
            prop_assert_eq!(owned.len(), layout.slots.len());
        }
    }

    #[test]
    fn checked_modes_preserve_semantics(seed in 0u64..500, a in -100i64..100, b in -100i64..100) {
        let text = random_program(seed, 10);
        let base = run(&text, Mode::Baseline, &[a, b]);
        prop_assert_eq!(base.outcome, Outcome::Completed);
        for mode in [Mode::Protected, Mode::FieldInsensitive] {
            let r = run(&text, mode, &[a, b]);
            prop_assert_eq!(r.outcome, Outcome::Completed);
            prop_assert_eq!(&r.output, &base.output);
        }
    }

    #[test]
    fn lowering_is_deterministic(seed in 0u64..500) {
        let text = random_program(seed, 10);
        prop_assert_eq!(compile(&text).content_hash(), compile(&text).content_hash());
    }
}
