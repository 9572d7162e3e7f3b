// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use fsdfi_core::runtime::{Mode, RunConfig};
use fsdfi_harness::load_corpus;
use fsdfi_testkit::clayout::{c_program, minic_lines, run_c};
use fsdfi_testkit::run_observed;
use fsdfi_testkit::trace::FieldAddrLog;

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/corpus_layouts.txt")
}

fn prefix(source: &str) -> &str {
    source.trim_end_matches(".mc")
}

/// Set `FSDFI_BLESS=1` to rewrite the golden file from the C compiler.
#[test]
fn corpus_layouts_match_the_c_golden_file() {
    let corpus = load_corpus(&corpus_dir()).unwrap();
    let mut lines = Vec::new();
    for (source, p) in &corpus.programs {
        lines.extend(minic_lines(prefix(source), &p.typed));
    }
    let ours = lines.join("\n") + "\n";

    let programs: Vec<(&str, _)> = corpus
        .programs
        .iter()
        .map(|(s, p)| (prefix(s), &p.typed))
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let from_cc = run_c(&c_program(&programs), dir.path());
    if std::env::var_os("FSDFI_BLESS").is_some() {
        let text = from_cc.as_deref().expect("blessing needs a C compiler");
        std::fs::create_dir_all(golden_path().parent().unwrap()).unwrap();
        std::fs::write(golden_path(), text).unwrap();
    }
    let golden = std::fs::read_to_string(golden_path()).unwrap();
    assert_eq!(ours, golden);
    if let Some(text) = from_cc {
        assert_eq!(text, golden, "golden file is stale");
    }
}

#[test]
fn runtime_field_addresses_are_mode_independent() {
    let corpus = load_corpus(&corpus_dir()).unwrap();
    for case in &corpus.cases {
        let prog = &corpus.program(case).ir;
        let mut logs = Vec::new();
        for mode in Mode::ALL {
            let mut log = FieldAddrLog::default();
            let mut cfg = RunConfig::new(mode);
            cfg.log_continue = true;
            run_observed(prog, &cfg, &case.spec.input, &mut log);
            assert!(
                log.entries.iter().all(|(off, got)| u64::from(*off) == *got),
                "{}",
                case.id
            );
            logs.push(log.entries);
        }
        assert!(logs.windows(2).all(|w| w[0] == w[1]), "{}", case.id);
    }
}
