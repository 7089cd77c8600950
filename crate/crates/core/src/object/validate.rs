use std::collections::HashSet;
use std::fmt;

use crate::isa::Instruction;

use super::{
    image::SlotLayout, Binding, DataInit, ModuleKind, ObjectModule, RelocKind, SymbolKind,
};

/// Where in a module an invariant was violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Header,
    Need(usize),
    Symbol(usize),
    Relocation(usize),
    Data(usize),
    Function(usize),
    Instruction(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationError {
    pub location: Location,
    pub reason: String,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.location, self.reason)
    }
}

impl std::error::Error for ValidationError {}

fn fail(location: Location, reason: impl Into<String>) -> Result<(), ValidationError> {
    Err(ValidationError {
        location,
        reason: reason.into(),
    })
}

pub(super) fn validate(m: &ObjectModule) -> Result<(), ValidationError> {
    let nstr = m.strings.len() as u32;
    if m.name >= nstr {
        return fail(Location::Header, "module name out of string pool range");
    }
    for (i, &n) in m.needed.iter().enumerate() {
        if n >= nstr {
            return fail(Location::Need(i), "needed name out of string pool range");
        }
    }

    let mut names = HashSet::new();
    for (i, s) in m.symbols.iter().enumerate() {
        if s.name >= nstr {
            return fail(Location::Symbol(i), "symbol name out of string pool range");
        }
        if !names.insert(s.name) {
            return fail(
                Location::Symbol(i),
                format!("duplicate symbol `{}`", m.str(s.name)),
            );
        }
        match (s.binding, s.location) {
            (Binding::Defined, None) => {
                return fail(Location::Symbol(i), "defined symbol without a location")
            }
            (Binding::Defined, Some(loc)) => {
                let limit = match s.kind {
                    SymbolKind::Func => m.functions.len(),
                    SymbolKind::Data => m.data.len(),
                };
                if loc as usize >= limit {
                    return fail(Location::Symbol(i), "symbol location out of range");
                }
            }
            (_, Some(_)) => return fail(Location::Symbol(i), "undefined symbol with a location"),
            (_, None) => {}
        }
    }

    for (i, d) in m.data.iter().enumerate() {
        if let DataInit::Str(s) = d {
            if *s >= nstr {
                return fail(Location::Data(i), "data string out of string pool range");
            }
        }
    }

    let layout = if m.kind.is_linked() {
        Some(SlotLayout::of(m))
    } else {
        None
    };

    let mut covered = HashSet::new();
    for (i, r) in m.relocations.iter().enumerate() {
        let loc = Location::Relocation(i);
        let Some(sym) = m.symbols.get(r.symbol as usize) else {
            return fail(loc, "relocation symbol out of range");
        };
        if sym.binding.is_defined() {
            return fail(loc, "relocation against a defined symbol");
        }
        let Some(func) = m.functions.get(r.site.func as usize) else {
            return fail(loc, "relocation site function out of range");
        };
        let Some(ins) = func.code.get(r.site.instr as usize) else {
            return fail(loc, "relocation site instruction out of range");
        };
        let operands = ins.operands();
        let Some(&value) = operands.get(r.site.operand as usize) else {
            return fail(loc, "relocation site operand out of range");
        };
        let ok = matches!(
            (r.kind, sym.kind, ins, r.site.operand),
            (
                RelocKind::GotSlot,
                SymbolKind::Func,
                Instruction::FacJz { .. },
                0
            ) | (
                RelocKind::GotSlot,
                SymbolKind::Data,
                Instruction::LoadG(_),
                0
            ) | (
                RelocKind::GotSlot,
                SymbolKind::Data,
                Instruction::StoreG(_),
                0
            ) | (
                RelocKind::PltSlot,
                SymbolKind::Func,
                Instruction::CallX { .. },
                0
            )
        );
        if !ok {
            return fail(loc, format!("relocation kind does not fit `{ins}`"));
        }
        if !covered.insert((r.site.func, r.site.instr)) {
            return fail(loc, "two relocations for one site");
        }
        if let Some(layout) = &layout {
            let name = m.str(sym.name);
            let expected = match r.kind {
                RelocKind::GotSlot => layout.got_index(name),
                RelocKind::PltSlot => layout.plt_index(name),
            };
            if expected != Some(value) {
                return fail(loc, format!("site slot does not match layout for `{name}`"));
            }
        }
    }

    for (fi, f) in m.functions.iter().enumerate() {
        if f.name >= nstr {
            return fail(
                Location::Function(fi),
                "function name out of string pool range",
            );
        }
        if f.nparams > f.nlocals {
            return fail(Location::Function(fi), "more parameters than locals");
        }
        let len = f.code.len() as u32;
        for (ii, ins) in f.code.iter().enumerate() {
            let loc = Location::Instruction(fi, ii);
            let has_reloc = covered.contains(&(fi as u32, ii as u32));
            match *ins {
                Instruction::LoadS(s) if s >= nstr => {
                    return fail(loc, "string index out of range")
                }
                Instruction::LoadL(l) | Instruction::StoreL(l) if l >= f.nlocals => {
                    return fail(loc, "local index out of range")
                }
                Instruction::LoadD(d) | Instruction::StoreD(d) if d as usize >= m.data.len() => {
                    return fail(loc, "data slot out of range")
                }
                Instruction::CallI { func, .. } if func as usize >= m.functions.len() => {
                    return fail(loc, "function index out of range")
                }
                Instruction::LoadG(g)
                | Instruction::StoreG(g)
                | Instruction::FacJz { got: g, .. } => {
                    check_slot(m, &layout, loc, has_reloc, g, false)?
                }
                Instruction::CallX { plt, .. } => {
                    check_slot(m, &layout, loc, has_reloc, plt, true)?
                }
                _ => {}
            }
            if let Some(t) = ins.branch_target() {
                if t >= len {
                    return fail(loc, "jump target outside function");
                }
            }
        }
    }

    if m.kind == ModuleKind::Executable && m.function_by_name("main").is_none() {
        return fail(Location::Header, "executable does not define `main`");
    }
    Ok(())
}

fn check_slot(
    m: &ObjectModule,
    layout: &Option<SlotLayout>,
    loc: Location,
    has_reloc: bool,
    value: u32,
    plt: bool,
) -> Result<(), ValidationError> {
    if !has_reloc {
        return fail(loc, "table access without a relocation");
    }
    match layout {
        None => Ok(()),
        Some(layout) => {
            let limit = if plt {
                layout.plt.len()
            } else {
                layout.got.len()
            };
            if value as usize >= limit {
                fail(
                    loc,
                    format!(
                        "{} index out of range in `{}`",
                        if plt { "PLT" } else { "GOT" },
                        m.name()
                    ),
                )
            } else {
                Ok(())
            }
        }
    }
}
