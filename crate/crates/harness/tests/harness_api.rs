// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};

use fsdfi_core::ir::{Inst, IrProgram};
use fsdfi_core::runtime::{Mode, Outcome, RunConfig};
use fsdfi_core::vfa::analyze;
use fsdfi_harness::{
    aggregate_overheads, compare_modes, compile_source, count_overheads, load_corpus, read_report,
    render_report, run_corpus, run_loaded, Category, CorpusError, MetricsError, ReportFormat,
};

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

fn ir(text: &str) -> IrProgram {
    compile_source("t.mc", text).unwrap().ir
}

/// (instructions, loads, stores) of a program whose functions are single
/// blocks, counted from the IR text rather than by running it.
fn straight_line_counts(prog: &IrProgram) -> (u64, u64, u64) {
    let (mut n, mut l, mut s) = (0, 0, 0);
    for f in [prog.function(prog.init), prog.function(prog.main)] {
        assert_eq!(f.blocks.len(), 1);
        let b = &f.blocks[0];
        n += b.insts.len() as u64 + 1;
        l += b
            .insts
            .iter()
            .filter(|i| matches!(i, Inst::Load { .. }))
            .count() as u64;
        s += b
            .insts
            .iter()
            .filter(|i| matches!(i, Inst::Store { .. }))
            .count() as u64;
    }
    (n, l, s)
}

#[test]
fn runtime_proxy_follows_the_counter_formula() {
    let prog = ir("int g; void main() { int x; int y; x = 1; y = x + 2; g = y; print(g + x); }");
    let (n, l, s) = straight_line_counts(&prog);
    let cmp = compare_modes(&prog, &analyze(&prog), &[], &RunConfig::new(Mode::Baseline)).unwrap();
    assert_eq!(cmp.baseline.counters.instructions, n);
    assert_eq!(cmp.protected.counters.loads_checked, l);
    assert_eq!(cmp.protected.counters.stores_recorded, s);
    let o = count_overheads(&cmp.baseline, &cmp.protected).unwrap();
    assert_eq!(o.runtime_proxy, (l + s) as f64 / n as f64);
    // g, x, y: one slot each; 12 program bytes.
    assert_eq!(o.memory_proxy, 12.0 / 12.0);
}

#[test]
fn zero_load_program_costs_only_records() {
    let prog =
        ir("struct P { int a; int b; char c; }; void main() { struct P p; p.a = 1; p.b = 2; }");
    let (n, l, s) = straight_line_counts(&prog);
    assert_eq!(l, 0);
    let cmp = compare_modes(&prog, &analyze(&prog), &[], &RunConfig::new(Mode::Baseline)).unwrap();
    let o = count_overheads(&cmp.baseline, &cmp.protected).unwrap();
    assert_eq!(o.runtime_proxy, s as f64 / n as f64);
    assert!(o.memory_proxy > 0.0);
    assert_eq!(o.memory_proxy, 12.0 / 12.0);
}

#[test]
fn overheads_need_matching_completed_runs() {
    let a = ir("void main() { print(1); }");
    let b = ir("void main() { print(2); }");
    let cfg = RunConfig::new(Mode::Baseline);
    let ra = compare_modes(&a, &analyze(&a), &[], &cfg).unwrap();
    let rb = compare_modes(&b, &analyze(&b), &[], &cfg).unwrap();
    assert!(matches!(
        count_overheads(&ra.baseline, &rb.protected),
        Err(MetricsError::HashMismatch { .. })
    ));
    let f = ir("void main(int z) { print(1 / z); }");
    let rf = compare_modes(&f, &analyze(&f), &[0], &cfg).unwrap();
    assert_eq!(
        count_overheads(&rf.baseline, &rf.protected),
        Err(MetricsError::Incomplete(Mode::Baseline))
    );
}

#[test]
fn compare_modes_examples() {
    let corpus = load_corpus(&corpus_dir()).unwrap();
    let cfg = RunConfig::new(Mode::Baseline);
    let triple = |id: &str| {
        let case = corpus.case(id).unwrap();
        let prog = &corpus.program(case).ir;
        compare_modes(prog, &analyze(prog), &case.spec.input, &cfg)
            .unwrap()
            .outcomes()
    };
    use Outcome::{Completed as C, Violation as V};
    assert_eq!(triple("intra-struct-flagship"), (C, C, V));
    assert_eq!(triple("adjacent-heap-array"), (C, V, V));
    assert_eq!(triple("adjacent-heap-record"), (C, V, V));
    for case in corpus
        .cases
        .iter()
        .filter(|c| c.spec.category == Category::BenignTwin)
    {
        assert_eq!(triple(&case.id), (C, C, C), "{}", case.id);
    }
}

#[test]
fn adjacent_heap_cases_use_distinct_allocation_sites() {
    let corpus = load_corpus(&corpus_dir()).unwrap();
    for case in corpus
        .cases
        .iter()
        .filter(|c| c.spec.category == Category::AdjacentHeapOverflow)
    {
        let prog = &corpus.program(case).ir;
        let heap_sites = prog
            .alloc_sites
            .iter()
            .filter(|s| s.kind.to_string() == "heap")
            .count();
        assert!(heap_sites >= 2, "{}", case.id);
    }
}

#[test]
fn corpus_report_is_consistent() {
    let report = run_corpus(&corpus_dir(), &Mode::ALL, &RunConfig::new(Mode::Baseline)).unwrap();
    assert!(report.all_matched(), "{:?}", report.mismatches);
    for mode in Mode::ALL {
        assert_eq!(report.detected[mode.name()], report.detected_by(mode).len());
    }
    let intra: Vec<&str> = report
        .cases
        .iter()
        .filter(|c| c.category == Category::IntraStructOverflow)
        .map(|c| c.id.as_str())
        .collect();
    assert!(!intra.is_empty());
    for id in intra {
        assert!(report.precision_delta.iter().any(|p| p == id), "{id}");
    }
    let o = report.overhead.unwrap();
    assert!(o.runtime_min < o.runtime_proxy && o.runtime_proxy < o.runtime_max);
    assert!(o.memory_min < o.memory_proxy && o.memory_proxy < o.memory_max);
    assert_eq!(
        o.cases,
        report.cases.iter().filter(|c| c.overhead.is_some()).count()
    );
}

#[test]
fn aggregate_lies_within_the_per_case_range() {
    assert!(aggregate_overheads(&[]).is_none());
    let corpus = load_corpus(&corpus_dir()).unwrap();
    let report = run_loaded(&corpus, &Mode::ALL, &RunConfig::new(Mode::Baseline)).unwrap();
    let rows: Vec<_> = report.cases.iter().filter_map(|c| c.overhead).collect();
    let agg = aggregate_overheads(&rows).unwrap();
    for r in &rows {
        assert!(agg.runtime_min <= r.runtime_proxy && r.runtime_proxy <= agg.runtime_max);
    }
}

#[test]
fn reports_round_trip_and_tables_have_one_row_per_case() {
    let report = run_corpus(&corpus_dir(), &Mode::ALL, &RunConfig::new(Mode::Baseline)).unwrap();
    let json = render_report(&report, ReportFormat::Json);
    assert_eq!(read_report(&json).unwrap(), report);

    let table = render_report(&report, ReportFormat::TextTable);
    let rows: Vec<&str> = table
        .lines()
        .skip_while(|l| !l.starts_with("---"))
        .skip(1)
        .take_while(|l| !l.starts_with("---"))
        .collect();
    assert_eq!(rows.len(), report.cases.len());
    for (row, case) in rows.iter().zip(&report.cases) {
        assert!(row.starts_with(&case.id));
    }
    assert!("csv".parse::<ReportFormat>().is_err());
    assert_eq!(
        "text-table".parse::<ReportFormat>(),
        Ok(ReportFormat::TextTable)
    );
}

#[test]
fn corpus_runs_are_byte_identical() {
    let cfg = RunConfig::new(Mode::Baseline);
    let a = render_report(
        &run_corpus(&corpus_dir(), &Mode::ALL, &cfg).unwrap(),
        ReportFormat::Json,
    );
    let b = render_report(
        &run_corpus(&corpus_dir(), &Mode::ALL, &cfg).unwrap(),
        ReportFormat::Json,
    );
    assert_eq!(a, b);
}

fn copy_corpus(to: &Path) {
    for entry in std::fs::read_dir(corpus_dir()).unwrap() {
        let p = entry.unwrap().path();
        std::fs::copy(&p, to.join(p.file_name().unwrap())).unwrap();
    }
}

#[test]
fn empty_directory_is_a_corpus_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        run_corpus(dir.path(), &Mode::ALL, &RunConfig::new(Mode::Baseline)),
        Err(CorpusError::Empty(_))
    ));
}

#[test]
fn malformed_cases_are_all_listed_before_running() {
    let dir = tempfile::tempdir().unwrap();
    copy_corpus(dir.path());
    let d = dir.path();
    std::fs::write(d.join("broken.case.json"), "{ not json").unwrap();
    std::fs::write(d.join("orphan.mc"), "void main() { }").unwrap();
    std::fs::write(
        d.join("bad_syntax.case.json"),
        r#"{"source": "bad_syntax.mc", "category": "benign-twin", "input": [],
            "twin_of": "uaf-session",
            "expect": {"protected": "completed", "field-insensitive": "completed", "baseline": "completed"}}"#,
    )
    .unwrap();
    std::fs::write(d.join("bad_syntax.mc"), "void main( {").unwrap();
    std::fs::remove_file(d.join("uaf-reuse-benign.case.json")).unwrap();
    let Err(CorpusError::Malformed(problems)) = load_corpus(d) else {
        panic!("expected a malformed corpus");
    };
    let all = problems.join("\n");
    assert!(all.contains("broken"), "{all}");
    assert!(all.contains("orphan.mc"), "{all}");
    assert!(all.contains("bad_syntax.mc"), "{all}");
    assert!(
        all.contains("uaf-reuse: `twin` names unknown case"),
        "{all}"
    );
}

#[test]
fn twins_must_share_the_source_and_differ_in_input() {
    let dir = tempfile::tempdir().unwrap();
    copy_corpus(dir.path());
    let path = dir.path().join("uaf-session-benign.case.json");
    let text = std::fs::read_to_string(&path)
        .unwrap()
        .replace("[\n    0\n  ]", "[\n    1\n  ]");
    std::fs::write(&path, text).unwrap();
    let Err(CorpusError::Malformed(problems)) = load_corpus(dir.path()) else {
        panic!("expected a malformed corpus");
    };
    assert!(
        problems.iter().any(|p| p.contains("same input")),
        "{problems:?}"
    );
}

#[test]
fn wrong_expectation_is_reported_as_a_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    copy_corpus(dir.path());
    let path = dir.path().join("intra-struct-flagship.case.json");
    let text = std::fs::read_to_string(&path).unwrap().replace(
        "\"field-insensitive\": \"completed\"",
        "\"field-insensitive\": \"violation\"",
    );
    std::fs::write(&path, text).unwrap();
    let report = run_corpus(dir.path(), &Mode::ALL, &RunConfig::new(Mode::Baseline)).unwrap();
    assert!(!report.all_matched());
    assert_eq!(report.mismatches.len(), 1);
    let m = &report.mismatches[0];
    assert_eq!(m.case, "intra-struct-flagship");
    assert_eq!(m.mode, Mode::FieldInsensitive);
    assert_eq!(m.expected, Outcome::Violation);
    assert_eq!(m.actual, Outcome::Completed);
}
