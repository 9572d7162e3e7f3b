// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

//! Corpus cases and their sidecar expectation files.
//!
//! A case is a `<id>.case.json` file naming a MiniC source in the same
//! directory. An attack case and its benign twin share one source and differ
//! only in their input.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fsdfi_core::runtime::{Mode, Outcome};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compile::{compile_file, Compiled};

pub const CASE_SUFFIX: &str = ".case.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    IntraStructOverflow,
    AdjacentHeapOverflow,
    StackAdjacentOverflow,
    UseAfterFree,
    WrongPointerWrite,
    BenignTwin,
}

impl Category {
    pub const ATTACKS: [Category; 5] = [
        Category::IntraStructOverflow,
        Category::AdjacentHeapOverflow,
        Category::StackAdjacentOverflow,
        Category::UseAfterFree,
        Category::WrongPointerWrite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::IntraStructOverflow => "intra-struct-overflow",
            Category::AdjacentHeapOverflow => "adjacent-heap-overflow",
            Category::StackAdjacentOverflow => "stack-adjacent-overflow",
            Category::UseAfterFree => "use-after-free",
            Category::WrongPointerWrite => "wrong-pointer-write",
            Category::BenignTwin => "benign-twin",
        }
    }

    pub fn is_attack(self) -> bool {
        self != Category::BenignTwin
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Category::ATTACKS
            .into_iter()
            .chain([Category::BenignTwin])
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown category `{s}`"))
    }
}

/// Expected outcome in each mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Expectation {
    pub protected: Outcome,
    pub field_insensitive: Outcome,
    pub baseline: Outcome,
}

impl Expectation {
    pub fn get(&self, mode: Mode) -> Outcome {
        match mode {
            Mode::Protected => self.protected,
            Mode::FieldInsensitive => self.field_insensitive,
            Mode::Baseline => self.baseline,
        }
    }
}

/// Sidecar file contents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    pub source: String,
    pub category: Category,
    pub input: Vec<i64>,
    pub expect: Expectation,
    /// Benign twin of an attack case.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub twin: Option<String>,
    /// Attack case a benign twin belongs to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub twin_of: Option<String>,
    /// Inclusive per-input ranges under which a benign twin stays benign.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub benign_ranges: Vec<(i64, i64)>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

#[derive(Debug, Clone)]
pub struct CorpusCase {
    pub id: String,
    pub source_path: PathBuf,
    pub spec: CaseFile,
}

/// A loaded corpus: cases sorted by id and each distinct source compiled once.
#[derive(Debug)]
pub struct Corpus {
    pub dir: PathBuf,
    pub cases: Vec<CorpusCase>,
    pub programs: BTreeMap<String, Compiled>,
}

impl Corpus {
    pub fn program(&self, case: &CorpusCase) -> &Compiled {
        &self.programs[&case.spec.source]
    }

    pub fn case(&self, id: &str) -> Option<&CorpusCase> {
        self.cases.iter().find(|c| c.id == id)
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus directory {0}: {1}")]
    Io(String, std::io::Error),
    #[error("corpus directory {0} contains no cases")]
    Empty(String),
    #[error("{} malformed corpus entries:\n{}", .0.len(), .0.join("\n"))]
    Malformed(Vec<String>),
}

/// Reads and validates every case in `dir` without running anything.
pub fn load_corpus(dir: &Path) -> Result<Corpus, CorpusError> {
    let shown = dir.display().to_string();
    let entries = std::fs::read_dir(dir).map_err(|e| CorpusError::Io(shown.clone(), e))?;
    let mut case_files = Vec::new();
    let mut sources = BTreeSet::new();
    for entry in entries {
        let path = entry.map_err(|e| CorpusError::Io(shown.clone(), e))?.path();
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default();
        if let Some(id) = name.strip_suffix(CASE_SUFFIX) {
            case_files.push((id.to_string(), path.clone()));
        } else if name.ends_with(".mc") {
            sources.insert(name.to_string());
        }
    }
    if case_files.is_empty() {
        return Err(CorpusError::Empty(shown));
    }
    case_files.sort();

    let mut problems = Vec::new();
    let mut cases = Vec::new();
    for (id, path) in case_files {
        let parsed = std::fs::read_to_string(&path)
            .map_err(|e| e.to_string())
            .and_then(|t| serde_json::from_str::<CaseFile>(&t).map_err(|e| e.to_string()));
        match parsed {
            Ok(spec) => cases.push(CorpusCase {
                source_path: dir.join(&spec.source),
                id,
                spec,
            }),
            Err(e) => problems.push(format!("{id}: {e}")),
        }
    }

    let mut programs = BTreeMap::new();
    let referenced: BTreeSet<&str> = cases.iter().map(|c| c.spec.source.as_str()).collect();
    for source in &referenced {
        match compile_file(&dir.join(source)) {
            Ok(p) => {
                programs.insert(source.to_string(), p);
            }
            Err(e) => problems.push(format!("{source}: {e}")),
        }
    }
    for orphan in sources.iter().filter(|s| !referenced.contains(s.as_str())) {
        problems.push(format!("{orphan}: no case file refers to this source"));
    }

    let by_id: BTreeMap<&str, &CorpusCase> = cases.iter().map(|c| (c.id.as_str(), c)).collect();
    for c in &cases {
        problems.extend(check_case(c, &by_id, &programs));
    }
    if !problems.is_empty() {
        return Err(CorpusError::Malformed(problems));
    }
    Ok(Corpus {
        dir: dir.to_path_buf(),
        cases,
        programs,
    })
}

fn check_case(
    c: &CorpusCase,
    by_id: &BTreeMap<&str, &CorpusCase>,
    programs: &BTreeMap<String, Compiled>,
) -> Vec<String> {
    let mut out = Vec::new();
    let id = &c.id;
    if let Some(p) = programs.get(&c.spec.source) {
        let arity = p.ir.function(p.ir.main).params.len();
        if arity != c.spec.input.len() {
            out.push(format!(
                "{id}: main takes {arity} inputs, case gives {}",
                c.spec.input.len()
            ));
        }
        if !c.spec.benign_ranges.is_empty() && c.spec.benign_ranges.len() != arity {
            out.push(format!("{id}: benign_ranges must cover all {arity} inputs"));
        }
    }
    if c.spec.benign_ranges.iter().any(|(lo, hi)| lo > hi) {
        out.push(format!("{id}: empty benign range"));
    }
    let partner = |field: &str, other: &Option<String>| -> Result<&CorpusCase, String> {
        let name = other
            .as_deref()
            .ok_or_else(|| format!("{id}: missing `{field}`"))?;
        by_id
            .get(name)
            .copied()
            .ok_or_else(|| format!("{id}: `{field}` names unknown case {name}"))
    };
    if c.spec.category.is_attack() {
        if c.spec.twin_of.is_some() {
            out.push(format!("{id}: attack cases take `twin`, not `twin_of`"));
        }
        match partner("twin", &c.spec.twin) {
            Ok(t) => {
                if t.spec.category != Category::BenignTwin {
                    out.push(format!("{id}: twin {} is not a benign-twin case", t.id));
                }
                if t.spec.twin_of.as_deref() != Some(id.as_str()) {
                    out.push(format!("{id}: twin {} does not point back", t.id));
                }
                if t.spec.source != c.spec.source {
                    out.push(format!("{id}: twin {} uses a different source", t.id));
                }
                if t.spec.input == c.spec.input {
                    out.push(format!("{id}: twin {} has the same input", t.id));
                }
            }
            Err(e) => out.push(e),
        }
    } else {
        if c.spec.twin.is_some() {
            out.push(format!("{id}: benign twins take `twin_of`, not `twin`"));
        }
        if let Err(e) = partner("twin_of", &c.spec.twin_of) {
            out.push(e);
        }
    }
    out
}
