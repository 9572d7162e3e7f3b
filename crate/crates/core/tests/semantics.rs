// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

use fsdfi_core::runtime::{Mode, Outcome, RunConfig};
use fsdfi_core::vfa::{analyze, build_constraints, solve_points_to};
use fsdfi_testkit::eval::{evaluate, EvalError};
use fsdfi_testkit::gen::random_program;
use fsdfi_testkit::oracle::brute_force_legal;
use fsdfi_testkit::programs::SMALL;
use fsdfi_testkit::trace::{LegalityAudit, LiveSlotAudit, ShadowOracle, Tee};
use fsdfi_testkit::{compile, run, run_observed, typed};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const STEPS: u64 = 1_000_000;

fn inputs_for(text: &str, raw: &[i64]) -> Vec<i64> {
    let prog = typed(text);
    let arity = prog.function(prog.main).param_count;
    raw.iter().copied().take(arity).collect()
}

#[test]
fn baseline_output_matches_the_reference_evaluator_on_small_programs() {
    let mut compared = 0;
    for (name, text) in SMALL {
        let input = inputs_for(text, &[1, 2]);
        let expected = evaluate(&typed(text), &input, STEPS);
        let got = run(text, Mode::Baseline, &input);
        match expected {
            Ok(out) => {
                assert_eq!(got.outcome, Outcome::Completed, "{name}");
                assert_eq!(got.output, out, "{name}");
                compared += 1;
            }
            Err(EvalError::Undefined(_)) => {}
            Err(e) => panic!("{name}: {e:?}"),
        }
    }
    assert!(compared >= 20, "only {compared} programs compared");
}

#[test]
fn all_modes_agree_with_the_reference_on_generated_programs() {
    let mut rng = StdRng::seed_from_u64(7);
    for seed in 0..30 {
        let text = random_program(seed, 14);
        let input = [rng.gen_range(-50..50), rng.gen_range(-50..50)];
        let expected = evaluate(&typed(&text), &input, STEPS)
            .unwrap_or_else(|e| panic!("seed {seed}: {e:?}\n{text}"));
        let mut instructions = Vec::new();
        for mode in Mode::ALL {
            let r = run(&text, mode, &input);
            assert_eq!(r.outcome, Outcome::Completed, "seed {seed} {mode}\n{text}");
            assert_eq!(r.output, expected, "seed {seed} {mode}");
            assert!(r.violations.is_empty());
            if mode.is_checked() {
                assert_eq!(r.counters.loads_checked, r.counters.loads);
                assert_eq!(r.counters.stores_recorded, r.counters.stores);
            } else {
                assert_eq!(r.counters.loads_checked, 0);
                assert_eq!(r.counters.stores_recorded, 0);
            }
            instructions.push(r.counters.instructions);
        }
        assert!(instructions.windows(2).all(|w| w[0] == w[1]), "seed {seed}");
    }
}

/// Replays every checked load against brute-force legal sets and the shadow
/// against a byte-level replay of the store stream.
#[test]
fn randomized_runs_observe_only_legal_defs() {
    let mut rng = StdRng::seed_from_u64(11);
    let mut loads = 0;
    for run_no in 0..100u64 {
        let text = random_program(run_no % 25, 12);
        let prog = compile(&text);
        let cs = build_constraints(&prog);
        let sol = solve_points_to(&cs);
        let legal = brute_force_legal(&prog.content_hash(), &cs, &sol, false);
        let input = [rng.gen_range(-1000..1000), rng.gen_range(-1000..1000)];

        let mut audit = LegalityAudit::new(&legal);
        let mut shadow = ShadowOracle::default();
        let mut slots = LiveSlotAudit::default();
        let report = run_observed(
            &prog,
            &RunConfig::new(Mode::Protected),
            &input,
            &mut Tee(vec![&mut audit, &mut shadow, &mut slots]),
        );
        assert_eq!(report.outcome, Outcome::Completed, "run {run_no}\n{text}");
        assert!(audit.illegal.is_empty(), "{:?}", audit.illegal);
        assert!(shadow.mismatches.is_empty(), "{:?}", shadow.mismatches);
        assert!(slots.mismatches.is_empty(), "{:?}", slots.mismatches);
        assert_eq!(slots.peak, report.counters.peak_live_slots);
        assert_eq!(audit.checks, report.counters.loads_checked);
        loads += audit.checks;
    }
    assert!(loads > 1000);
}

#[test]
fn shadow_replay_agrees_on_small_programs_in_both_checked_modes() {
    for mode in [Mode::Protected, Mode::FieldInsensitive] {
        for (name, text) in SMALL {
            let prog = compile(text);
            let input = inputs_for(text, &[1, 2]);
            let mut shadow = ShadowOracle::default();
            let mut slots = LiveSlotAudit::default();
            let mut cfg = RunConfig::new(mode);
            cfg.log_continue = true;
            run_observed(&prog, &cfg, &input, &mut Tee(vec![&mut shadow, &mut slots]));
            assert!(
                shadow.mismatches.is_empty(),
                "{name} {mode}: {:?}",
                shadow.mismatches
            );
            assert!(
                slots.mismatches.is_empty(),
                "{name} {mode}: {:?}",
                slots.mismatches
            );
        }
    }
}

#[test]
fn analysis_is_deterministic() {
    for seed in 0..10 {
        let text = random_program(seed, 12);
        let a = analyze(&compile(&text)).artifact(false).to_json();
        let b = analyze(&compile(&text)).artifact(false).to_json();
        assert_eq!(a, b);
    }
}
