// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

use fsdfi_core::vfa::{
    build_constraints, compute_legal_defs, field_insensitive_projection, solve_points_to,
};
use fsdfi_testkit::compile;
use fsdfi_testkit::gen::random_program;
use fsdfi_testkit::oracle::{brute_force_insensitive, brute_force_legal, naive_points_to};
use fsdfi_testkit::programs::SMALL;

fn check_program(name: &str, text: &str) {
    let prog = compile(text);
    let hash = prog.content_hash();
    let cs = build_constraints(&prog);
    let sol = solve_points_to(&cs);
    assert_eq!(sol, naive_points_to(&cs), "{name}: points-to");
    for strict in [false, true] {
        let fs = compute_legal_defs(&hash, &cs, &sol, strict);
        assert_eq!(
            fs,
            brute_force_legal(&hash, &cs, &sol, strict),
            "{name}: legal"
        );
        let fi = field_insensitive_projection(&hash, &cs, &sol, strict);
        assert_eq!(
            fi,
            brute_force_insensitive(&hash, &cs, &sol, strict),
            "{name}: projection"
        );
        assert!(fi.is_superset_of(&fs), "{name}: monotonicity");
    }
}

#[test]
fn small_programs_fit_the_size_bound() {
    assert!(SMALL.len() >= 20);
    for (name, text) in SMALL {
        let n = compile(text).inst_count();
        assert!(n <= 50, "{name} has {n} instructions");
    }
}

#[test]
fn solver_and_legal_sets_match_oracles_on_small_programs() {
    for (name, text) in SMALL {
        check_program(name, text);
    }
}

#[test]
fn solver_and_legal_sets_match_oracles_on_generated_programs() {
    for seed in 0..40 {
        check_program(&format!("seed {seed}"), &random_program(seed, 12));
    }
}

#[test]
fn field_sensitivity_is_strictly_finer_somewhere() {
    let (_, text) = SMALL
        .iter()
        .find(|(n, _)| *n == "intra_struct_overflow")
        .unwrap();
    let prog = compile(text);
    let cs = build_constraints(&prog);
    let sol = solve_points_to(&cs);
    let fs = compute_legal_defs("h", &cs, &sol, false);
    let fi = field_insensitive_projection("h", &cs, &sol, false);
    assert!(fi.total_size() > fs.total_size());
}
