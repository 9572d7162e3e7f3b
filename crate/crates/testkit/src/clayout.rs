// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

//! Struct layouts as a C compiler sees them.
//!
//! MiniC struct declarations are valid C, so every declared struct is
//! re-emitted as C and measured with `sizeof`/`offsetof`. Both sides print
//! the same line format, one line per struct and one per member.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;
use std::process::Command;

use fsdfi_core::frontend::{StructId, Type, TypeTable, TypedProgram};

fn c_struct_name(prefix: &str, table: &TypeTable, id: StructId) -> String {
    format!("{prefix}__{}", table.get(id).name)
}

fn declarator(prefix: &str, table: &TypeTable, ty: &Type, name: &str) -> String {
    match ty {
        Type::Int => format!("int {name}"),
        Type::Char => format!("char {name}"),
        Type::Void => format!("void {name}"),
        Type::Pointer(inner) if matches!(**inner, Type::Array(..)) => {
            declarator(prefix, table, inner, &format!("(*{name})"))
        }
        Type::Pointer(inner) => declarator(prefix, table, inner, &format!("*{name}")),
        Type::Array(inner, n) => declarator(prefix, table, inner, &format!("{name}[{n}]")),
        Type::Struct(id) => format!("struct {} {name}", c_struct_name(prefix, table, *id)),
    }
}

fn by_value_deps(ty: &Type, out: &mut Vec<StructId>) {
    match ty {
        Type::Array(inner, _) => by_value_deps(inner, out),
        Type::Struct(id) => out.push(*id),
        _ => {}
    }
}

fn emit_struct(
    prefix: &str,
    table: &TypeTable,
    id: StructId,
    done: &mut BTreeSet<StructId>,
    out: &mut String,
) {
    if !done.insert(id) {
        return;
    }
    let def = table.get(id);
    let mut deps = Vec::new();
    for f in &def.fields {
        by_value_deps(&f.ty, &mut deps);
    }
    for d in deps {
        emit_struct(prefix, table, d, done, out);
    }
    let _ = write!(out, "struct {} {{", c_struct_name(prefix, table, id));
    for f in &def.fields {
        let _ = write!(out, " {};", declarator(prefix, table, &f.ty, &f.name));
    }
    out.push_str(" };\n");
}

/// C declarations plus `printf` calls for every struct of `prog`.
fn c_fragment(prefix: &str, prog: &TypedProgram) -> (String, String) {
    let table = &prog.types;
    let mut decls = String::new();
    for (id, _) in table.iter() {
        let _ = writeln!(decls, "struct {};", c_struct_name(prefix, table, id));
    }
    let mut done = BTreeSet::new();
    for (id, _) in table.iter() {
        emit_struct(prefix, table, id, &mut done, &mut decls);
    }
    let mut body = String::new();
    for (id, def) in table.iter() {
        let c = format!("struct {}", c_struct_name(prefix, table, id));
        let _ = writeln!(
            body,
            "  printf(\"{prefix} {name} size %zu align %zu\\n\", sizeof({c}), _Alignof({c}));",
            name = def.name
        );
        for f in &def.fields {
            let _ = writeln!(
                body,
                "  printf(\"{prefix} {name}.{field} offset %zu size %zu\\n\", offsetof({c}, {field}), sizeof((({c}*)0)->{field}));",
                name = def.name,
                field = f.name
            );
        }
    }
    (decls, body)
}

/// A complete C program printing the layout lines of every program given.
pub fn c_program(programs: &[(&str, &TypedProgram)]) -> String {
    let mut decls = String::new();
    let mut body = String::new();
    for (prefix, prog) in programs {
        let (d, b) = c_fragment(prefix, prog);
        decls.push_str(&d);
        body.push_str(&b);
    }
    format!(
        "#include <stddef.h>\n#include <stdio.h>\n\n{decls}\nint main(void) {{\n{body}  return 0;\n}}\n"
    )
}

/// The same lines computed from the MiniC layouts.
pub fn minic_lines(prefix: &str, prog: &TypedProgram) -> Vec<String> {
    let mut out = Vec::new();
    for (id, def) in prog.types.iter() {
        let layout = prog.struct_layout(id);
        out.push(format!(
            "{prefix} {} size {} align {}",
            def.name, layout.size, layout.align
        ));
        for f in &layout.fields {
            out.push(format!(
                "{prefix} {}.{} offset {} size {}",
                def.name, f.name, f.offset, f.size
            ));
        }
    }
    out
}

/// Compiles and runs `source` with the system C compiler, returning stdout.
/// `None` when no compiler is available.
pub fn run_c(source: &str, workdir: &Path) -> Option<String> {
    let c = workdir.join("layouts.c");
    let exe = workdir.join("layouts");
    std::fs::write(&c, source).ok()?;
    let status = Command::new("cc")
        .arg("-std=c11")
        .arg("-o")
        .arg(&exe)
        .arg(&c)
        .status()
        .ok()?;
    assert!(status.success(), "cc rejected the generated layout program");
    let out = Command::new(&exe).output().ok()?;
    assert!(out.status.success());
    Some(String::from_utf8(out.stdout).expect("utf-8 output"))
}
