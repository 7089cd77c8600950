//! Static link editor: merges relocatables into an executable or a shared
//! library and assigns GOT/PLT slots to whatever stays external.

mod stub;

use std::collections::HashMap;

use thiserror::Error;

use crate::isa::Instruction;
use crate::object::{
    Binding, DataInit, Function, ModuleKind, ObjectModule, RelocKind, RelocSite, Relocation,
    SlotLayout, SymbolEntry, SymbolKind, ValidationError,
};

pub use stub::{gen_stub, parse_stub_spec, StubSpec, StubSpecError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinkMode {
    /// Every non-weak undefined symbol must be defined by a library on the
    /// input list.
    #[default]
    Strict,
    /// Undefined symbols are recorded and given slots regardless.
    Tolerant,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinkError {
    #[error("duplicate symbol `{name}` defined in `{first}` and `{second}`")]
    DuplicateSymbol {
        name: String,
        first: String,
        second: String,
    },
    #[error("undefined reference to `{name}` (first referenced in `{module}`)")]
    UndefinedReference { name: String, module: String },
    #[error("`{name}` is used as {used} but is {defined}")]
    KindMismatch {
        name: String,
        used: SymbolKind,
        defined: SymbolKind,
    },
    #[error("`{0}` is already linked into an executable and cannot be an input")]
    BadInput(String),
    #[error("executable has no `main` function")]
    MissingEntry,
    #[error("output failed validation: {0}")]
    Invalid(#[from] ValidationError),
}

/// Where a merged definition ended up.
#[derive(Debug, Clone, Copy)]
struct Def {
    module: usize,
    kind: SymbolKind,
    location: u32,
}

#[derive(Debug, Clone)]
struct External {
    name: String,
    kind: SymbolKind,
    binding: Binding,
    first_module: usize,
}

/// Link `inputs` into a module of `kind` named `name`.
///
/// Relocatable inputs are merged. Shared-library inputs are not copied; they
/// only vouch for symbols so that strict linking can succeed. `needed` is
/// recorded verbatim and in order.
pub fn link(
    inputs: &[ObjectModule],
    name: &str,
    kind: ModuleKind,
    mode: LinkMode,
    needed: &[&str],
) -> Result<ObjectModule, LinkError> {
    let mut objects = Vec::new();
    let mut providers = Vec::new();
    for m in inputs {
        match m.kind {
            ModuleKind::Relocatable => objects.push(m),
            ModuleKind::SharedLib => providers.push(m),
            ModuleKind::Executable => return Err(LinkError::BadInput(m.name().to_owned())),
        }
    }

    let mut func_base = Vec::with_capacity(objects.len());
    let mut data_base = Vec::with_capacity(objects.len());
    let (mut nf, mut nd) = (0u32, 0u32);
    for m in &objects {
        func_base.push(nf);
        data_base.push(nd);
        nf += m.functions.len() as u32;
        nd += m.data.len() as u32;
    }

    let mut defs: HashMap<&str, Def> = HashMap::new();
    for (mi, m) in objects.iter().enumerate() {
        for s in m.symbols.iter().filter(|s| s.binding.is_defined()) {
            let sname = m.symbol_name(s);
            let base = if s.kind == SymbolKind::Func {
                func_base[mi]
            } else {
                data_base[mi]
            };
            let def = Def {
                module: mi,
                kind: s.kind,
                location: base + s.location.unwrap_or(0),
            };
            if let Some(prev) = defs.insert(sname, def) {
                return Err(LinkError::DuplicateSymbol {
                    name: sname.to_owned(),
                    first: objects[prev.module].name().to_owned(),
                    second: m.name().to_owned(),
                });
            }
        }
    }

    let mut externals: Vec<External> = Vec::new();
    let mut ext_index: HashMap<String, usize> = HashMap::new();
    for (mi, m) in objects.iter().enumerate() {
        for s in m.undefined_symbols() {
            let sname = m.symbol_name(s);
            if let Some(d) = defs.get(sname) {
                if d.kind != s.kind {
                    return Err(LinkError::KindMismatch {
                        name: sname.to_owned(),
                        used: s.kind,
                        defined: d.kind,
                    });
                }
                continue;
            }
            match ext_index.get(sname) {
                Some(&i) => {
                    let e = &mut externals[i];
                    if e.kind != s.kind {
                        return Err(LinkError::KindMismatch {
                            name: sname.to_owned(),
                            used: s.kind,
                            defined: e.kind,
                        });
                    }
                    if s.binding == Binding::Undefined {
                        e.binding = Binding::Undefined;
                    }
                }
                None => {
                    ext_index.insert(sname.to_owned(), externals.len());
                    externals.push(External {
                        name: sname.to_owned(),
                        kind: s.kind,
                        binding: s.binding,
                        first_module: mi,
                    });
                }
            }
        }
    }

    for e in &externals {
        let provided = providers.iter().find_map(|p| p.definition(&e.name));
        match provided {
            Some(p) if p.kind != e.kind => {
                return Err(LinkError::KindMismatch {
                    name: e.name.clone(),
                    used: e.kind,
                    defined: p.kind,
                })
            }
            Some(_) => {}
            None if mode == LinkMode::Strict && e.binding == Binding::Undefined => {
                return Err(LinkError::UndefinedReference {
                    name: e.name.clone(),
                    module: objects[e.first_module].name().to_owned(),
                })
            }
            None => {}
        }
    }

    let mut out = ObjectModule::new(name, kind);
    for n in needed {
        out.add_needed(n);
    }

    for (mi, m) in objects.iter().enumerate() {
        for s in m.symbols.iter().filter(|s| s.binding.is_defined()) {
            let sname = out.strings.intern(m.symbol_name(s));
            let base = if s.kind == SymbolKind::Func {
                func_base[mi]
            } else {
                data_base[mi]
            };
            out.symbols.push(SymbolEntry {
                name: sname,
                kind: s.kind,
                binding: Binding::Defined,
                location: s.location.map(|l| l + base),
            });
        }
    }
    let ext_base = out.symbols.len() as u32;
    for e in &externals {
        let sname = out.strings.intern(&e.name);
        out.symbols.push(SymbolEntry {
            name: sname,
            kind: e.kind,
            binding: e.binding,
            location: None,
        });
    }
    let layout = SlotLayout::of(&out);

    for (mi, m) in objects.iter().enumerate() {
        let mut strmap = Vec::with_capacity(m.strings.len());
        for s in m.strings.iter() {
            strmap.push(out.strings.intern(s));
        }
        for d in &m.data {
            out.data.push(match *d {
                DataInit::Str(s) => DataInit::Str(strmap[s as usize]),
                other => other,
            });
        }
        let relocs: HashMap<(u32, u32), &Relocation> = m
            .relocations
            .iter()
            .map(|r| ((r.site.func, r.site.instr), r))
            .collect();
        for (fi, f) in m.functions.iter().enumerate() {
            let new_fi = func_base[mi] + fi as u32;
            let mut code = Vec::with_capacity(f.code.len());
            for (ii, ins) in f.code.iter().enumerate() {
                let ins = remap_local(*ins, func_base[mi], data_base[mi], &strmap);
                let Some(r) = relocs.get(&(fi as u32, ii as u32)) else {
                    code.push(ins);
                    continue;
                };
                let sname = m.symbol_name(&m.symbols[r.symbol as usize]);
                if let Some(d) = defs.get(sname) {
                    code.push(resolve_internal(ins, ii as u32, d.location));
                    continue;
                }
                let ei = ext_index[sname];
                let slot = match r.kind {
                    RelocKind::GotSlot => layout.got_index(sname),
                    RelocKind::PltSlot => layout.plt_index(sname),
                }
                .expect("every external has a slot");
                code.push(ins.with_operand(0, slot).expect("relocated operand 0"));
                out.relocations.push(Relocation {
                    site: RelocSite {
                        func: new_fi,
                        instr: ii as u32,
                        operand: 0,
                    },
                    symbol: ext_base + ei as u32,
                    kind: r.kind,
                });
            }
            out.functions.push(Function {
                name: strmap[f.name as usize],
                nparams: f.nparams,
                nlocals: f.nlocals,
                code,
            });
        }
    }

    if kind == ModuleKind::Executable && out.function_by_name("main").is_none() {
        return Err(LinkError::MissingEntry);
    }
    out.validate()?;
    Ok(out)
}

fn remap_local(ins: Instruction, func_base: u32, data_base: u32, strmap: &[u32]) -> Instruction {
    match ins {
        Instruction::CallI { func, argc } => Instruction::CallI {
            func: func + func_base,
            argc,
        },
        Instruction::LoadS(s) => Instruction::LoadS(strmap[s as usize]),
        Instruction::LoadD(d) => Instruction::LoadD(d + data_base),
        Instruction::StoreD(d) => Instruction::StoreD(d + data_base),
        other => other,
    }
}

/// A table access whose symbol turned out to be defined in the same link.
fn resolve_internal(ins: Instruction, at: u32, location: u32) -> Instruction {
    match ins {
        Instruction::CallX { argc, .. } => Instruction::CallI {
            func: location,
            argc,
        },
        // A merged definition is always available.
        Instruction::FacJz { .. } => Instruction::Jmp(at + 1),
        Instruction::LoadG(_) => Instruction::LoadD(location),
        Instruction::StoreG(_) => Instruction::StoreD(location),
        other => other,
    }
}
