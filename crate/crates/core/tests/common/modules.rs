use fac_core::isa::{Instruction, NullKind, TrapCode};
use fac_core::object::{
    Binding, DataInit, Function, ModuleKind, ObjectModule, RelocKind, RelocSite, Relocation,
    SlotLayout, SymbolEntry, SymbolKind, UNASSIGNED,
};
use proptest::prelude::*;

/// Opcode selector and three operand seeds.
type Insn = (u8, u32, u32, i64);

/// Raw choices; `build` folds them into a module that satisfies every
/// structural invariant.
#[derive(Debug, Clone)]
pub struct Shape {
    kind: u8,
    strings: Vec<String>,
    needed: Vec<usize>,
    data: Vec<(u8, i64)>,
    externs: Vec<(bool, bool)>,
    functions: Vec<(u8, u8, Vec<Insn>)>,
}

pub fn shape() -> impl Strategy<Value = Shape> {
    (
        0u8..3,
        prop::collection::vec("[a-z]{0,6}", 0..5),
        prop::collection::vec(any::<usize>(), 0..3),
        prop::collection::vec((0u8..4, any::<i64>()), 0..4),
        prop::collection::vec((any::<bool>(), any::<bool>()), 0..4),
        prop::collection::vec(
            (
                0u8..3,
                0u8..3,
                prop::collection::vec(
                    (any::<u8>(), any::<u32>(), any::<u32>(), any::<i64>()),
                    0..24,
                ),
            ),
            1..4,
        ),
    )
        .prop_map(|(kind, strings, needed, data, externs, functions)| Shape {
            kind,
            strings,
            needed,
            data,
            externs,
            functions,
        })
}

fn fn_name(i: usize) -> String {
    if i == 0 {
        "main".into()
    } else {
        format!("f{i}")
    }
}

pub fn build(s: &Shape) -> ObjectModule {
    let kind = ModuleKind::from_u8(s.kind).unwrap();
    let mut m = ObjectModule::new("gen", kind);
    for st in &s.strings {
        m.strings.intern(st);
    }
    let nstr = m.strings.len() as u32;
    for &n in &s.needed {
        m.needed.push((n % nstr as usize) as u32);
    }
    for &(tag, v) in &s.data {
        m.data.push(match tag {
            0 => DataInit::Int(v),
            1 => DataInit::Str((v.unsigned_abs() % nstr as u64) as u32),
            2 => DataInit::NullHandle,
            _ => DataInit::NullFuncRef,
        });
    }
    let nfuncs = s.functions.len() as u32;
    let ndata = m.data.len() as u32;
    for i in 0..nfuncs {
        let name = m.strings.intern(&fn_name(i as usize));
        m.symbols.push(SymbolEntry {
            name,
            kind: SymbolKind::Func,
            binding: Binding::Defined,
            location: Some(i),
        });
    }
    for i in 0..ndata {
        let name = m.strings.intern(&format!("d{i}"));
        m.symbols.push(SymbolEntry {
            name,
            kind: SymbolKind::Data,
            binding: Binding::Defined,
            location: Some(i),
        });
    }
    let ext_base = m.symbols.len() as u32;
    for (i, &(is_func, weak)) in s.externs.iter().enumerate() {
        let name = m.strings.intern(&format!("x{i}"));
        m.symbols.push(SymbolEntry {
            name,
            kind: if is_func {
                SymbolKind::Func
            } else {
                SymbolKind::Data
            },
            binding: if weak {
                Binding::WeakUndefined
            } else {
                Binding::Undefined
            },
            location: None,
        });
    }
    let nstr = m.strings.len() as u32;
    let layout = SlotLayout::of(&m);
    let ext_funcs: Vec<u32> = (0..s.externs.len() as u32)
        .filter(|&i| s.externs[i as usize].0)
        .collect();
    let ext_data: Vec<u32> = (0..s.externs.len() as u32)
        .filter(|&i| !s.externs[i as usize].0)
        .collect();
    let linked = kind.is_linked();
    let slot = |sym: u32, plt: bool, m: &ObjectModule| -> u32 {
        if !linked {
            return UNASSIGNED;
        }
        let name = m.str(m.symbols[sym as usize].name);
        if plt {
            layout.plt_index(name)
        } else {
            layout.got_index(name)
        }
        .unwrap()
    };

    for (fi, (np, extra, raw)) in s.functions.iter().enumerate() {
        let nparams = *np as u32;
        let nlocals = nparams + *extra as u32;
        let len = raw.len().max(1) as u32;
        let mut code = Vec::new();
        for &(op, a, b, k) in raw {
            let ins = match op % 30 {
                0 => Instruction::LoadI(k),
                1 => Instruction::LoadS(a % nstr),
                2 => Instruction::LoadN(
                    [NullKind::Handle, NullKind::FuncRef, NullKind::Unit][a as usize % 3],
                ),
                3 if nlocals > 0 => Instruction::LoadL(a % nlocals),
                4 if nlocals > 0 => Instruction::StoreL(a % nlocals),
                5 if ndata > 0 => Instruction::LoadD(a % ndata),
                6 if ndata > 0 => Instruction::StoreD(a % ndata),
                7 => Instruction::Add,
                8 => Instruction::Sub,
                9 => Instruction::Eq,
                10 => Instruction::Ne,
                11 => Instruction::Pop,
                12 => Instruction::Jz(a % len),
                13 => Instruction::Jmp(a % len),
                14 => Instruction::CallI {
                    func: a % nfuncs,
                    argc: b % 4,
                },
                15 => Instruction::CallD { argc: b % 3 },
                16 => Instruction::Ret,
                17 => Instruction::PrintInt,
                18 => Instruction::PrintStr,
                19 => Instruction::DynOpen,
                20 => Instruction::DynSym,
                21 => Instruction::DynClose,
                22 => Instruction::Trap(TrapCode::from_u32(10 + a % 6).unwrap()),
                23 => Instruction::SetGot,
                24 => Instruction::Halt,
                25..=27 if !ext_data.is_empty() || !ext_funcs.is_empty() => {
                    let use_func = ext_data.is_empty() || (!ext_funcs.is_empty() && op % 2 == 0);
                    let instr = code.len() as u32;
                    let (ins, sym, rk) = if use_func {
                        let sym = ext_base + ext_funcs[a as usize % ext_funcs.len()];
                        if op % 30 == 25 {
                            (
                                Instruction::CallX {
                                    plt: slot(sym, true, &m),
                                    argc: b % 3,
                                },
                                sym,
                                RelocKind::PltSlot,
                            )
                        } else {
                            (
                                Instruction::FacJz {
                                    got: slot(sym, false, &m),
                                    target: b % len,
                                },
                                sym,
                                RelocKind::GotSlot,
                            )
                        }
                    } else {
                        let sym = ext_base + ext_data[a as usize % ext_data.len()];
                        let g = slot(sym, false, &m);
                        let ins = if op % 30 == 25 {
                            Instruction::LoadG(g)
                        } else {
                            Instruction::StoreG(g)
                        };
                        (ins, sym, RelocKind::GotSlot)
                    };
                    m.relocations.push(Relocation {
                        site: RelocSite {
                            func: fi as u32,
                            instr,
                            operand: 0,
                        },
                        symbol: sym,
                        kind: rk,
                    });
                    ins
                }
                _ => Instruction::LoadI(k),
            };
            code.push(ins);
        }
        if code.is_empty() {
            code.push(Instruction::Halt);
        }
        let name = m.strings.lookup(&fn_name(fi)).unwrap();
        m.functions.push(Function {
            name,
            nparams,
            nlocals,
            code,
        });
    }
    m
}
