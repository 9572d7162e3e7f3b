// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

//! Pretty-printer producing re-parseable MiniC source.

use std::fmt::Write;

use super::ast::*;

pub fn print_ast(ast: &Ast) -> String {
    let mut out = String::new();
    for item in &ast.items {
        match item {
            Item::Struct(s) => {
                let _ = writeln!(out, "struct {} {{", s.name);
                for f in &s.fields {
                    let _ = writeln!(out, "    {};", declarator(&f.ty, &f.name));
                }
                out.push_str("};\n");
            }
            Item::Global(g) => {
                out.push_str(&decl(g));
                out.push('\n');
            }
            Item::Function(func) => {
                let params: Vec<_> = func
                    .params
                    .iter()
                    .map(|p| declarator(&p.ty, &p.name))
                    .collect();
                let _ = writeln!(
                    out,
                    "{} {}({}) {{",
                    type_name(&func.ret),
                    func.name,
                    params.join(", ")
                );
                for s in &func.body {
                    stmt(&mut out, s, 1);
                }
                out.push_str("}\n");
            }
        }
    }
    out
}

pub fn type_name(ty: &TypeExpr) -> String {
    match ty {
        TypeExpr::Int => "int".into(),
        TypeExpr::Char => "char".into(),
        TypeExpr::Void => "void".into(),
        TypeExpr::Struct(n) => format!("struct {n}"),
        TypeExpr::Pointer(inner) => format!("{}*", type_name(inner)),
        TypeExpr::Array(inner, n) => format!("{}[{n}]", type_name(inner)),
    }
}

fn declarator(ty: &TypeExpr, name: &str) -> String {
    let mut dims = Vec::new();
    let mut base = ty;
    while let TypeExpr::Array(inner, n) = base {
        dims.push(*n);
        base = inner;
    }
    let mut s = format!("{} {}", type_name(base), name);
    for n in dims {
        let _ = write!(s, "[{n}]");
    }
    s
}

fn decl(d: &VarDecl) -> String {
    let mut s = declarator(&d.ty, &d.name);
    if let Some(init) = &d.init {
        s.push_str(" = ");
        s.push_str(&expr(init));
    }
    s.push(';');
    s
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("    ");
    }
}

fn stmt(out: &mut String, s: &Stmt, depth: usize) {
    indent(out, depth);
    match &s.kind {
        StmtKind::Decl(d) => {
            out.push_str(&decl(d));
            out.push('\n');
        }
        StmtKind::Assign(l, r) => {
            let _ = writeln!(out, "{} = {};", expr(l), expr(r));
        }
        StmtKind::Block(body) => {
            out.push_str("{\n");
            for b in body {
                stmt(out, b, depth + 1);
            }
            indent(out, depth);
            out.push_str("}\n");
        }
        StmtKind::If(c, t, e) => {
            let _ = writeln!(out, "if ({})", expr(c));
            stmt(out, t, depth + 1);
            if let Some(e) = e {
                indent(out, depth);
                out.push_str("else\n");
                stmt(out, e, depth + 1);
            }
        }
        StmtKind::While(c, b) => {
            let _ = writeln!(out, "while ({})", expr(c));
            stmt(out, b, depth + 1);
        }
        StmtKind::Expr(e) => {
            let _ = writeln!(out, "{};", expr(e));
        }
        StmtKind::Return(Some(e)) => {
            let _ = writeln!(out, "return {};", expr(e));
        }
        StmtKind::Return(None) => out.push_str("return;\n"),
        StmtKind::Free(e) => {
            let _ = writeln!(out, "free({});", expr(e));
        }
        StmtKind::Print(e) => {
            let _ = writeln!(out, "print({});", expr(e));
        }
    }
}

/// Renders an expression; binary operations are always parenthesized so the
/// output re-parses to the same tree.
pub fn expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::IntLit(v) => v.to_string(),
        ExprKind::CharLit(c) => match c {
            b'\n' => "'\\n'".into(),
            b'\t' => "'\\t'".into(),
            0 => "'\\0'".into(),
            b'\\' => "'\\\\'".into(),
            b'\'' => "'\\''".into(),
            c => format!("'{}'", *c as char),
        },
        ExprKind::Var(n) => n.clone(),
        ExprKind::Field(b, f) => format!("{}.{f}", postfix_base(b)),
        ExprKind::Arrow(b, f) => format!("{}->{f}", postfix_base(b)),
        ExprKind::Index(b, i) => format!("{}[{}]", postfix_base(b), expr(i)),
        ExprKind::AddrOf(b) => format!("&{}", expr(b)),
        ExprKind::Deref(b) => format!("*{}", expr(b)),
        ExprKind::Neg(b) => format!("-{}", expr(b)),
        ExprKind::Binary(op, l, r) => format!("({} {} {})", expr(l), op.symbol(), expr(r)),
        ExprKind::Call(name, args) => {
            let args: Vec<_> = args.iter().map(expr).collect();
            format!("{name}({})", args.join(", "))
        }
        ExprKind::Malloc { ty, count } => match count {
            Some(c) => format!("malloc(sizeof({}) * {})", type_name(ty), expr(c)),
            None => format!("malloc(sizeof({}))", type_name(ty)),
        },
    }
}

fn postfix_base(e: &Expr) -> String {
    match e.kind {
        ExprKind::AddrOf(_) | ExprKind::Deref(_) | ExprKind::Neg(_) => format!("({})", expr(e)),
        _ => expr(e),
    }
}

#[cfg(test)]
mod tests {
    use super::super::parser::parse;
    use super::*;

    #[test]
    fn round_trips_a_small_program() {
        let text = "struct S { int a[4]; int k; };\n\
                    struct S* g;\n\
                    int f(struct S* p, int n) { p->a[n] = (*p).k - -1; return p->k; }\n\
                    void main() { struct S s; g = malloc(sizeof(struct S) * 2); \
                    if (f(&s, 1) == 0) print('a'); else { free(g); } while (0) {} }";
        let mut first = parse(&SourceProgram::new("a.mc", text)).unwrap();
        let printed = print_ast(&first);
        let mut second = parse(&SourceProgram::new("b.mc", printed.clone())).unwrap();
        first.clear_positions();
        second.clear_positions();
        assert_eq!(first, second, "printed:\n{printed}");
    }
}
