// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::ir::{DefSiteId, SiteCatalog};

use super::ViolationDetail;

/// Human-readable account of a violation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    /// Source rendering of the read, e.g. `s.k`.
    pub read: String,
    pub read_line: u32,
    /// Who last wrote the slot: a def site, `initial` or `released`.
    pub writer: String,
    pub writer_line: Option<u32>,
    /// Object and field slot the read touched, e.g. `s.k`.
    pub field: String,
    /// Legal writers as `L<line>` entries, `<initial>` last.
    pub legal_writers: Vec<String>,
    pub message: String,
}

pub fn diagnose(v: &ViolationDetail, catalog: &SiteCatalog) -> Diagnostic {
    let read = catalog
        .use_site(v.use_site)
        .map_or_else(|| format!("u{}", v.use_site), |u| u.target.clone());
    let field = match v.slot_path.as_str() {
        "" => v.object.clone(),
        p if p.starts_with('[') => format!("{}{p}", v.object),
        p => format!("{}.{p}", v.object),
    };
    let mut legal_writers: Vec<String> = Vec::new();
    for &d in &v.legal_set {
        if d == DefSiteId::INITIAL.0 {
            continue;
        }
        if let Some(e) = catalog.def(d) {
            let line = format!("L{}", e.line);
            if !legal_writers.contains(&line) {
                legal_writers.push(line);
            }
        }
    }
    if v.legal_set.contains(&DefSiteId::INITIAL.0) {
        legal_writers.push("<initial>".to_string());
    }
    let legal = if legal_writers.is_empty() {
        "none".to_string()
    } else {
        legal_writers.join(", ")
    };

    let (writer, writer_line, message) = if v.observed_def == DefSiteId::RELEASED.0 {
        let how = v.released_by.clone().unwrap_or_else(|| "release".into());
        (
            "released".to_string(),
            None,
            format!(
                "read of {read} at L{} saw released memory ({how}); legal writers: {legal}",
                v.use_line
            ),
        )
    } else if v.observed_def == DefSiteId::INITIAL.0 {
        (
            "initial".to_string(),
            None,
            format!(
                "uninitialized read of {read} at L{}; legal writers: {legal}",
                v.use_line
            ),
        )
    } else {
        let (target, line) = catalog
            .def(v.observed_def)
            .map_or((format!("d{}", v.observed_def), None), |e| {
                (e.target.clone(), Some(e.line))
            });
        let at = line.map_or(String::new(), |l| format!(" at L{l}"));
        (
            target.clone(),
            line,
            format!(
                "read of {read} at L{} saw write from {target}{at}; legal writers: {legal}",
                v.use_line
            ),
        )
    };
    Diagnostic {
        read,
        read_line: v.use_line,
        writer,
        writer_line,
        field,
        legal_writers,
        message,
    }
}
