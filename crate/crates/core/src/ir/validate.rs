// Copyright (c) The fsdfi Contributors
// SPDX-License-Identifier: Apache-2.0

use std::collections::HashSet;

use crate::frontend::compute_layout;
use crate::frontend::Type;

use super::*;

/// Checks the structural invariants the analysis and interpreter rely on:
/// dense unique site ids, single assignment of registers, pointer-typed
/// address operands and in-range control-flow targets.
pub fn validate_ir(prog: &IrProgram) -> Result<(), IrError> {
    let mut defs = HashSet::new();
    let mut uses = HashSet::new();
    let mut allocs = HashSet::new();

    for func in &prog.functions {
        let err = |location: String, message: String| IrError {
            function: func.name.clone(),
            location,
            message,
        };
        let mut assigned: HashSet<Reg> = func.params.iter().copied().collect();
        for (b, block) in func.blocks.iter().enumerate() {
            for (i, inst) in block.insts.iter().enumerate() {
                let loc = || format!("{}#{i}", BlockId(b as u32));
                if let Some(d) = inst.dest() {
                    if func.reg_type(d).is_none() {
                        return Err(err(loc(), format!("register {d} has no type")));
                    }
                    if !assigned.insert(d) {
                        return Err(err(loc(), format!("register {d} assigned twice")));
                    }
                }
                for r in inst.operands() {
                    if func.reg_type(r).is_none() {
                        return Err(err(loc(), format!("operand {r} out of range")));
                    }
                }
                let expect_pointer = |r: &Reg, what: &str| -> Result<&Type, IrError> {
                    match func.reg_type(*r) {
                        Some(Type::Pointer(inner)) => Ok(inner),
                        Some(other) => Err(err(
                            loc(),
                            format!(
                                "{what} operand {r} has non-pointer type {}",
                                other.display(&prog.types)
                            ),
                        )),
                        None => Err(err(loc(), format!("{what} operand {r} out of range"))),
                    }
                };
                match inst {
                    Inst::Store {
                        addr, width, site, ..
                    } => {
                        let pointee = expect_pointer(addr, "store address")?;
                        if pointee.scalar_size() != Some(*width) {
                            return Err(err(
                                loc(),
                                format!("store width {width} does not match target type"),
                            ));
                        }
                        if site.0 == 0 || site.0 > prog.def_count {
                            return Err(err(loc(), format!("def id {site} out of range")));
                        }
                        if !defs.insert(*site) {
                            return Err(err(loc(), format!("duplicate def id {site}")));
                        }
                    }
                    Inst::Load {
                        addr, width, site, ..
                    } => {
                        let pointee = expect_pointer(addr, "load address")?;
                        if pointee.scalar_size() != Some(*width) {
                            return Err(err(
                                loc(),
                                format!("load width {width} does not match source type"),
                            ));
                        }
                        if site.0 >= prog.use_count {
                            return Err(err(loc(), format!("use id {site} out of range")));
                        }
                        if !uses.insert(*site) {
                            return Err(err(loc(), format!("duplicate use id {site}")));
                        }
                    }
                    Inst::FieldAddr { base, offset, .. } => {
                        let pointee = expect_pointer(base, "field base")?;
                        let size = compute_layout(&prog.types, pointee)
                            .map(|l| l.size)
                            .unwrap_or(0);
                        if !matches!(pointee, Type::Struct(_)) || *offset >= size {
                            return Err(err(
                                loc(),
                                format!("field offset {offset} outside base type"),
                            ));
                        }
                    }
                    Inst::IndexAddr { base, index, .. } => {
                        expect_pointer(base, "index base")?;
                        if !func.reg_type(*index).is_some_and(Type::is_integral) {
                            return Err(err(loc(), format!("index {index} is not an integer")));
                        }
                    }
                    Inst::Free { addr, .. } => {
                        expect_pointer(addr, "free")?;
                    }
                    Inst::Alloc { site, .. } => {
                        if site.0 as usize >= prog.alloc_sites.len() {
                            return Err(err(loc(), format!("alloc site {site} out of range")));
                        }
                        if !allocs.insert(*site) {
                            return Err(err(loc(), format!("duplicate alloc site {site}")));
                        }
                    }
                    Inst::AddrOf { global, .. } => {
                        if *global as usize >= prog.global_sites.len() {
                            return Err(err(loc(), format!("unknown global {global}")));
                        }
                    }
                    Inst::Call { func: f, args, .. } => {
                        let Some(callee) = prog.functions.get(f.0 as usize) else {
                            return Err(err(loc(), format!("call to unknown function {f}")));
                        };
                        if callee.params.len() != args.len() {
                            return Err(err(
                                loc(),
                                format!("arity mismatch calling {}", callee.name),
                            ));
                        }
                    }
                    _ => {}
                }
            }
            let targets: Vec<BlockId> = match &block.term {
                Terminator::Jump(t) => vec![*t],
                Terminator::Branch {
                    cond,
                    then_bb,
                    else_bb,
                } => {
                    if func.reg_type(*cond).is_none() {
                        return Err(err(
                            format!("{}", BlockId(b as u32)),
                            format!("branch condition {cond} out of range"),
                        ));
                    }
                    vec![*then_bb, *else_bb]
                }
                Terminator::Ret(_) => vec![],
            };
            for t in targets {
                if t.0 as usize >= func.blocks.len() {
                    return Err(err(
                        format!("{}", BlockId(b as u32)),
                        format!("jump to missing block {t}"),
                    ));
                }
            }
        }
    }

    if defs.len() as u32 != prog.def_count {
        return Err(IrError {
            function: "<program>".into(),
            location: String::new(),
            message: format!("def ids not dense: {} of {}", defs.len(), prog.def_count),
        });
    }
    if uses.len() as u32 != prog.use_count {
        return Err(IrError {
            function: "<program>".into(),
            location: String::new(),
            message: format!("use ids not dense: {} of {}", uses.len(), prog.use_count),
        });
    }
    if allocs.len() != prog.alloc_sites.len() {
        return Err(IrError {
            function: "<program>".into(),
            location: String::new(),
            message: "alloc site without an Alloc instruction".into(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{check_source, SourceProgram};
    use crate::ir::lower;

    fn lowered(text: &str) -> IrProgram {
        lower(&check_source(&SourceProgram::new("t.mc", text)).unwrap()).unwrap()
    }

    const SAMPLE: &str = "struct S { int a[4]; int k; };\n\
        void main(int n) { struct S s; int i = 0; while (i < n) { s.a[i] = i; i = i + 1; } s.k = 7; print(s.k); }";

    #[test]
    fn lowered_program_is_valid() {
        validate_ir(&lowered(SAMPLE)).unwrap();
    }

    #[test]
    fn duplicate_def_id_is_reported() {
        let mut p = lowered(SAMPLE);
        let main = p.main.0 as usize;
        let mut seen = 0;
        for block in &mut p.functions[main].blocks {
            for inst in &mut block.insts {
                if let Inst::Store { site, .. } = inst {
                    seen += 1;
                    if seen == 2 {
                        *site = DefSiteId(1);
                    }
                }
            }
        }
        let e = validate_ir(&p).unwrap_err();
        assert!(e.message.contains("duplicate def id"), "{e}");
    }

    #[test]
    fn store_through_non_pointer_is_reported() {
        let mut p = lowered(SAMPLE);
        let main = p.main.0 as usize;
        let func = &mut p.functions[main];
        let int_reg = func
            .reg_types
            .iter()
            .position(|t| *t == Type::Int)
            .map(|i| Reg(i as u32))
            .unwrap();
        for block in &mut func.blocks {
            for inst in &mut block.insts {
                if let Inst::Store { addr, .. } = inst {
                    *addr = int_reg;
                }
            }
        }
        let e = validate_ir(&p).unwrap_err();
        assert!(e.message.contains("non-pointer"), "{e}");
    }

    #[test]
    fn reassigned_register_is_reported() {
        let mut p = lowered(SAMPLE);
        let main = p.main.0 as usize;
        let func = &mut p.functions[main];
        let first = func.blocks[0].insts[0].dest().unwrap();
        func.blocks[0].insts.push(Inst::Const {
            dest: first,
            value: 1,
        });
        let e = validate_ir(&p).unwrap_err();
        assert!(e.message.contains("assigned twice"), "{e}");
    }
}
