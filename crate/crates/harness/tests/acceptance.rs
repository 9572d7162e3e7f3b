// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

//! End-to-end acceptance checks. Prints one line per criterion and exits
//! nonzero if any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use fsdfi_core::ir::{AllocSiteId, IrProgram};
use fsdfi_core::runtime::{
    diagnose, interpret, tables_for, MemoryImage, Mode, Observer, Outcome, RunConfig,
};
use fsdfi_core::vfa::{
    analyze, build_constraints, compute_legal_defs, solve_points_to, LegalDefTable,
};
use fsdfi_harness::{
    compare_modes, compile_file, load_corpus, render_report, run_loaded, Category, Corpus,
    ReportFormat,
};
use fsdfi_testkit::clayout::{c_program, minic_lines, run_c};
use fsdfi_testkit::gen::random_program;
use fsdfi_testkit::oracle::{brute_force_insensitive, brute_force_legal, naive_points_to};
use fsdfi_testkit::programs::SMALL;
use fsdfi_testkit::trace::{FieldAddrLog, LegalityAudit, Tee};
use fsdfi_testkit::{compile, run_observed};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn corpus() -> Corpus {
    load_corpus(&manifest_dir().join("corpus")).expect("corpus loads")
}

fn cfg(mode: Mode) -> RunConfig {
    RunConfig::new(mode)
}

fn flagship() {
    let start = Instant::now();
    let compiled = compile_file(&manifest_dir().join("corpus/intra_struct_flagship.mc")).unwrap();
    let prog = &compiled.ir;
    let analysis = analyze(prog);
    let input = [4, 99];
    let first = compare_modes(prog, &analysis, &input, &cfg(Mode::Baseline)).unwrap();
    let again = compare_modes(prog, &analysis, &input, &cfg(Mode::Baseline)).unwrap();
    let elapsed = start.elapsed();

    for m in Mode::ALL {
        assert_eq!(first.get(m).to_json(), again.get(m).to_json(), "{m} rerun");
    }
    let honest = compare_modes(prog, &analysis, &[3, 99], &cfg(Mode::Baseline)).unwrap();
    assert_eq!(honest.baseline.output, vec![7]);
    for r in [&first.baseline, &first.field_insensitive] {
        assert_eq!(r.outcome, Outcome::Completed, "{}", r.mode);
        assert_eq!(r.output, vec![99], "{} output is corrupted", r.mode);
        assert_ne!(r.output, honest.baseline.output);
    }
    let p = &first.protected;
    assert_eq!(p.outcome, Outcome::Violation);
    let v = p.violation.as_ref().unwrap();
    let def = analysis
        .catalog
        .def(v.observed_def)
        .expect("a real def site");
    assert_eq!(def.target, "s.a[...]");
    assert_eq!(v.def_line, Some(6));
    assert_eq!(v.slot_path, "k");
    let msg = diagnose(v, &analysis.catalog).message;
    assert!(msg.contains("s.a[...] at L6"), "{msg}");
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
}

fn corpus_detection() {
    let start = Instant::now();
    let corpus = corpus();
    let report = run_loaded(&corpus, &Mode::ALL, &cfg(Mode::Baseline)).unwrap();
    assert!(report.all_matched(), "{:?}", report.mismatches);

    let attacks: Vec<_> = report
        .cases
        .iter()
        .filter(|c| c.category.is_attack())
        .collect();
    let benign: Vec<_> = report
        .cases
        .iter()
        .filter(|c| c.category == Category::BenignTwin)
        .collect();
    assert!(attacks.len() >= 12, "{} attacks", attacks.len());
    assert!(benign.len() >= 12, "{} benign twins", benign.len());
    let categories: BTreeSet<_> = attacks.iter().map(|c| c.category).collect();
    assert_eq!(categories.len(), Category::ATTACKS.len());
    for c in &attacks {
        assert!(c.detected(Mode::Protected), "{} missed", c.id);
    }

    let mut logging = cfg(Mode::Baseline);
    logging.log_continue = true;
    for c in &benign {
        let case = corpus.case(&c.id).unwrap();
        let prog = &corpus.program(case).ir;
        let runs = compare_modes(prog, &analyze(prog), &case.spec.input, &logging).unwrap();
        for m in Mode::ALL {
            let r = runs.get(m);
            assert_eq!(r.outcome, Outcome::Completed, "{} [{m}]", c.id);
            assert!(r.violations.is_empty(), "{} [{m}]", c.id);
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
}

fn oracle_equivalence() {
    let mut checked = 0;
    let programs = SMALL
        .iter()
        .map(|(n, t)| (n.to_string(), t.to_string()))
        .chain((0..10).map(|s| (format!("generated {s}"), random_program(s, 8))));
    for (name, text) in programs {
        let prog = compile(&text);
        if prog.inst_count() > 50 {
            continue;
        }
        let hash = prog.content_hash();
        let cs = build_constraints(&prog);
        let sol = solve_points_to(&cs);
        assert_eq!(sol, naive_points_to(&cs), "{name}: points-to");
        for strict in [false, true] {
            assert_eq!(
                compute_legal_defs(&hash, &cs, &sol, strict),
                brute_force_legal(&hash, &cs, &sol, strict),
                "{name}: legal sets"
            );
        }
        checked += 1;
    }
    assert!(
        checked >= 20,
        "only {checked} programs within the size bound"
    );
}

fn audited_run(prog: &IrProgram, input: &[i64], legal: &LegalDefTable, what: &str) -> u64 {
    let mut audit = LegalityAudit::new(legal);
    let report = run_observed(prog, &cfg(Mode::Protected), input, &mut audit);
    assert_eq!(report.outcome, Outcome::Completed, "{what}");
    assert!(audit.illegal.is_empty(), "{what}: {:?}", audit.illegal);
    assert_eq!(audit.checks, report.counters.loads_checked, "{what}");
    audit.checks
}

fn oracle_table(prog: &IrProgram) -> LegalDefTable {
    let cs = build_constraints(prog);
    let sol = naive_points_to(&cs);
    brute_force_legal(&prog.content_hash(), &cs, &sol, false)
}

fn dynamic_soundness() {
    let corpus = corpus();
    let benign: Vec<_> = corpus
        .cases
        .iter()
        .filter(|c| c.spec.category == Category::BenignTwin)
        .collect();
    let tables: BTreeMap<&str, LegalDefTable> = corpus
        .programs
        .iter()
        .map(|(s, p)| (s.as_str(), oracle_table(&p.ir)))
        .collect();
    let mut loads = 0;
    for case in &benign {
        let prog = &corpus.program(case).ir;
        loads += audited_run(
            prog,
            &case.spec.input,
            &tables[case.spec.source.as_str()],
            &case.id,
        );
    }

    let mut rng = StdRng::seed_from_u64(0x5eed);
    for run in 0..100 {
        let case = benign[run % benign.len()];
        let input: Vec<i64> = case
            .spec
            .benign_ranges
            .iter()
            .map(|&(lo, hi)| rng.gen_range(lo..=hi))
            .collect();
        let what = format!("{} {input:?}", case.id);
        let prog = &corpus.program(case).ir;
        loads += audited_run(prog, &input, &tables[case.spec.source.as_str()], &what);
    }
    assert!(loads > 0);
}

/// Live slots and bytes from allocation events, peaked.
#[derive(Default)]
struct LiveTotals {
    live: BTreeMap<u64, (u64, u64)>,
    peak_slots: u64,
    peak_bytes: u64,
    mismatches: Vec<String>,
}

impl LiveTotals {
    fn update(&mut self, mem: &MemoryImage) {
        let slots: u64 = self.live.values().map(|v| v.0).sum();
        let bytes: u64 = self.live.values().map(|v| v.1).sum();
        if slots != mem.live_slots() {
            self.mismatches
                .push(format!("events {slots}, counter {}", mem.live_slots()));
        }
        self.peak_slots = self.peak_slots.max(slots);
        self.peak_bytes = self.peak_bytes.max(bytes);
    }
}

impl Observer for LiveTotals {
    fn on_alloc(&mut self, mem: &MemoryImage, base: u64, _site: AllocSiteId) {
        let a = mem.allocation(mem.owner(base).unwrap());
        self.live
            .insert(base, (a.layout.slots.len() as u64, a.size));
        self.update(mem);
    }

    fn on_free(&mut self, mem: &MemoryImage, base: u64) {
        self.live.remove(&base);
        self.update(mem);
    }
}

fn metadata_economy() {
    let corpus = corpus();
    for case in &corpus.cases {
        let prog = &corpus.program(case).ir;
        for mode in [Mode::Protected, Mode::FieldInsensitive] {
            let mut totals = LiveTotals::default();
            let c = run_observed(prog, &cfg(mode), &case.spec.input, &mut totals).counters;
            let what = format!("{} [{mode}]", case.id);
            assert!(
                totals.mismatches.is_empty(),
                "{what}: {:?}",
                totals.mismatches
            );
            assert_eq!(c.peak_live_slots, totals.peak_slots, "{what}");
            assert_eq!(c.peak_live_bytes, totals.peak_bytes, "{what}");
            assert_eq!(c.metadata_bytes, 4 * totals.peak_slots, "{what}");
            assert_eq!(c.per_byte_shadow_bytes, 4 * totals.peak_bytes, "{what}");
            assert_eq!(c.program_bytes, totals.peak_bytes, "{what}");
            assert!(c.metadata_bytes < c.per_byte_shadow_bytes, "{what}");
        }
    }
}

/// Sizes of every allocation, in order.
#[derive(Default)]
struct AllocSizes(Vec<(u32, u64)>);

impl Observer for AllocSizes {
    fn on_alloc(&mut self, mem: &MemoryImage, base: u64, site: AllocSiteId) {
        let a = mem.allocation(mem.owner(base).unwrap());
        self.0.push((site.0, a.size));
    }
}

fn layout_invariance() {
    let corpus = corpus();
    let prefix = |s: &str| s.trim_end_matches(".mc").to_string();
    let mut ours = String::new();
    for (source, p) in &corpus.programs {
        for line in minic_lines(&prefix(source), &p.typed) {
            ours.push_str(&line);
            ours.push('\n');
        }
    }
    let golden =
        std::fs::read_to_string(manifest_dir().join("tests/golden/corpus_layouts.txt")).unwrap();
    assert_eq!(ours, golden, "layouts differ from the golden file");

    let prefixes: Vec<String> = corpus.programs.keys().map(|s| prefix(s)).collect();
    let programs: Vec<(&str, _)> = prefixes
        .iter()
        .zip(corpus.programs.values())
        .map(|(p, c)| (p.as_str(), &c.typed))
        .collect();
    let dir = tempfile::tempdir().unwrap();
    match run_c(&c_program(&programs), dir.path()) {
        Some(text) => assert_eq!(text, golden, "cc disagrees with the golden file"),
        None => println!("  (no C compiler; golden file only)"),
    }

    for case in &corpus.cases {
        let prog = &corpus.program(case).ir;
        let mut seen = Vec::new();
        for mode in Mode::ALL {
            let mut fields = FieldAddrLog::default();
            let mut sizes = AllocSizes::default();
            let mut config = cfg(mode);
            config.log_continue = true;
            run_observed(
                prog,
                &config,
                &case.spec.input,
                &mut Tee(vec![&mut fields, &mut sizes]),
            );
            assert!(
                fields
                    .entries
                    .iter()
                    .all(|(off, got)| u64::from(*off) == *got),
                "{} [{mode}]",
                case.id
            );
            seen.push((fields.entries, sizes.0));
        }
        assert!(seen.windows(2).all(|w| w[0] == w[1]), "{}", case.id);
    }
}

fn all_json(corpus: &Corpus) -> String {
    let mut out = String::new();
    for case in &corpus.cases {
        let prog = &corpus.program(case).ir;
        let analysis = analyze(prog);
        out += &analysis.artifact(false).to_json();
        out += &analysis.artifact(true).to_json();
        for mode in Mode::ALL {
            let config = cfg(mode);
            let tables = tables_for(&analysis, mode, false);
            let mut observer = fsdfi_core::runtime::NoObserver;
            let r = interpret(
                prog,
                tables.as_ref(),
                &config,
                &case.spec.input,
                &mut observer,
            )
            .unwrap();
            out += &r.to_json();
        }
    }
    let report = run_loaded(corpus, &Mode::ALL, &cfg(Mode::Baseline)).unwrap();
    out + &render_report(&report, ReportFormat::Json)
}

fn determinism() {
    let first = all_json(&corpus());
    let second = all_json(&corpus());
    assert!(first == second, "outputs differ between runs");
}

fn dominates(fi: &LegalDefTable, fs: &LegalDefTable, what: &str) {
    assert_eq!(fi.use_count(), fs.use_count(), "{what}");
    for u in 0..fs.use_count() as u32 {
        let id = fsdfi_core::ir::UseSiteId(u);
        let wide: BTreeSet<u32> = fi.legal(id).iter().copied().collect();
        assert!(
            fs.legal(id).iter().all(|d| wide.contains(d)),
            "{what}: use {u}"
        );
    }
}

fn check_projection(prog: &IrProgram, what: &str) {
    let hash = prog.content_hash();
    let cs = build_constraints(prog);
    let sol = solve_points_to(&cs);
    for strict in [false, true] {
        let fs = compute_legal_defs(&hash, &cs, &sol, strict);
        let fi = brute_force_insensitive(&hash, &cs, &sol, strict);
        dominates(&fi, &fs, what);
    }
    let a = analyze(prog);
    dominates(&a.field_insensitive, &a.field_sensitive, what);
}

fn mode_dominance() {
    let corpus = corpus();
    let report = run_loaded(&corpus, &Mode::ALL, &cfg(Mode::Baseline)).unwrap();
    let fi: BTreeSet<_> = report
        .detected_by(Mode::FieldInsensitive)
        .into_iter()
        .collect();
    let fs: BTreeSet<_> = report.detected_by(Mode::Protected).into_iter().collect();
    assert!(
        fi.is_subset(&fs),
        "{:?}",
        fi.difference(&fs).collect::<Vec<_>>()
    );
    assert!(fs.len() > fi.len());

    for (source, p) in &corpus.programs {
        check_projection(&p.ir, source);
    }
    for (name, text) in SMALL {
        check_projection(&compile(text), name);
    }
    for seed in 0..40 {
        check_projection(&compile(&random_program(seed, 12)), &format!("seed {seed}"));
    }
}

fn main() {
    let criteria: [(&str, fn()); 8] = [
        ("flagship", flagship),
        ("corpus detection", corpus_detection),
        ("oracle equivalence", oracle_equivalence),
        ("dynamic soundness", dynamic_soundness),
        ("metadata economy", metadata_economy),
        ("layout invariance", layout_invariance),
        ("determinism", determinism),
        ("mode dominance", mode_dominance),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check));
        let ms = start.elapsed().as_millis();
        match result {
            Ok(()) => println!("criterion {} {name}: pass ({ms} ms)", i + 1),
            Err(_) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({ms} ms)", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
