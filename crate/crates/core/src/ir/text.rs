// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

//! Stable line-oriented rendering of the IR, one instruction per line.

use std::fmt::Write;

use super::*;

pub fn emit_text(prog: &IrProgram) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "; fsdfi ir v1");
    for site in &prog.alloc_sites {
        let slots: Vec<&str> = site.layout.slots.iter().map(|s| s.path.as_str()).collect();
        let _ = writeln!(
            out,
            "site {} {} {} {:?} : {} size={} slots=[{}] @{}",
            site.id,
            site.kind,
            site.function,
            site.name,
            site.ty.display(&prog.types),
            site.layout.size,
            slots.join(","),
            site.pos
        );
    }
    for (i, func) in prog.functions.iter().enumerate() {
        let params: Vec<String> = func
            .params
            .iter()
            .map(|r| format!("{r}: {}", reg_ty(prog, func, *r)))
            .collect();
        let mut tags = Vec::new();
        if i as u32 == prog.main.0 {
            tags.push(" main");
        }
        if i as u32 == prog.init.0 {
            tags.push(" init");
        }
        let _ = writeln!(
            out,
            "func {} {}({}) -> {}{} {{",
            FuncIdx(i as u32),
            func.name,
            params.join(", "),
            func.ret.display(&prog.types),
            tags.concat()
        );
        for (b, block) in func.blocks.iter().enumerate() {
            let _ = writeln!(out, "{}:", BlockId(b as u32));
            for inst in &block.insts {
                out.push_str("  ");
                inst_line(&mut out, prog, func, inst);
                out.push('\n');
            }
            let _ = match &block.term {
                Terminator::Jump(t) => writeln!(out, "  jump {t}"),
                Terminator::Branch {
                    cond,
                    then_bb,
                    else_bb,
                } => writeln!(out, "  br {cond} {then_bb} {else_bb}"),
                Terminator::Ret(Some(r)) => writeln!(out, "  ret {r}"),
                Terminator::Ret(None) => writeln!(out, "  ret"),
            };
        }
        out.push_str("}\n");
    }
    out
}

fn reg_ty(prog: &IrProgram, func: &IrFunction, r: Reg) -> String {
    func.reg_type(r)
        .map(|t| t.display(&prog.types).to_string())
        .unwrap_or_else(|| "?".into())
}

fn inst_line(out: &mut String, prog: &IrProgram, func: &IrFunction, inst: &Inst) {
    let _ = match inst {
        Inst::Const { dest, value } => {
            write!(
                out,
                "{dest} = const {value} : {}",
                reg_ty(prog, func, *dest)
            )
        }
        Inst::Alloc { dest, site, count } => match count {
            Some(c) => write!(out, "{dest} = alloc {site} x {c}"),
            None => write!(out, "{dest} = alloc {site}"),
        },
        Inst::AddrOf { dest, global } => write!(out, "{dest} = addrof global{global}"),
        Inst::FieldAddr {
            dest,
            base,
            offset,
            field,
        } => write!(out, "{dest} = fieldaddr {base} +{offset} .{field}"),
        Inst::IndexAddr {
            dest,
            base,
            index,
            elem_size,
        } => write!(out, "{dest} = indexaddr {base} [{index} * {elem_size}]"),
        Inst::Load {
            dest,
            addr,
            width,
            site,
            pos,
            target,
        } => write!(
            out,
            "{site}: {dest} = load.{width} [{addr}] ; {target} @{pos}"
        ),
        Inst::Store {
            addr,
            value,
            width,
            site,
            pos,
            target,
        } => write!(
            out,
            "{site}: store.{width} [{addr}] <- {value} ; {target} @{pos}"
        ),
        Inst::Free { addr, pos } => write!(out, "free {addr} @{pos}"),
        Inst::Binary { dest, op, lhs, rhs } => {
            write!(out, "{dest} = {lhs} {} {rhs}", op.symbol())
        }
        Inst::Neg { dest, src } => write!(out, "{dest} = neg {src}"),
        Inst::Narrow { dest, src } => write!(out, "{dest} = narrow {src}"),
        Inst::Call {
            dest,
            func: f,
            args,
        } => {
            let args: Vec<String> = args.iter().map(|a| a.to_string()).collect();
            let name = &prog.function(*f).name;
            match dest {
                Some(d) => write!(out, "{d} = call {f} {name}({})", args.join(", ")),
                None => write!(out, "call {f} {name}({})", args.join(", ")),
            }
        }
        Inst::Print { value } => write!(out, "print {value}"),
    };
}
