//! The FACM object format: relocatables, shared libraries and executables.
//!
//! Names are held as string-pool indices in memory exactly as they are on
//! disk, so a decoded module is structurally identical to the one that was
//! encoded.

mod decode;
mod encode;
mod image;
mod validate;

use std::collections::HashMap;
use std::fmt;

use crate::isa::Instruction;

pub use decode::{decode_module, FormatError};
pub use encode::{encode_module, EncodeError};
pub use image::{ExecutableImage, GotEntry, ImageError, PltEntry, SlotLayout};
pub use validate::{Location, ValidationError};

pub const MAGIC: [u8; 4] = *b"FACM";
pub const VERSION: u16 = 1;
/// Encoded stand-in for an absent symbol location.
pub const NO_LOCATION: u32 = u32::MAX;
/// Operand value of a relocation site that has no slot assigned yet.
pub const UNASSIGNED: u32 = u32::MAX;

/// Interned strings. Lookups go through a side index which does not take part
/// in equality.
#[derive(Debug, Clone, Default)]
pub struct StringPool {
    strings: Vec<String>,
    index: HashMap<String, u32>,
}

impl PartialEq for StringPool {
    fn eq(&self, other: &Self) -> bool {
        self.strings == other.strings
    }
}

impl Eq for StringPool {}

impl StringPool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Build a pool from raw entries; duplicates are kept, the first copy wins
    /// for lookups.
    pub fn from_strings(strings: Vec<String>) -> Self {
        let mut index = HashMap::with_capacity(strings.len());
        for (i, s) in strings.iter().enumerate() {
            index.entry(s.clone()).or_insert(i as u32);
        }
        StringPool { strings, index }
    }

    pub fn intern(&mut self, s: &str) -> u32 {
        if let Some(&i) = self.index.get(s) {
            return i;
        }
        let i = self.strings.len() as u32;
        self.strings.push(s.to_owned());
        self.index.insert(s.to_owned(), i);
        i
    }

    pub fn lookup(&self, s: &str) -> Option<u32> {
        self.index.get(s).copied()
    }

    pub fn get(&self, idx: u32) -> Option<&str> {
        self.strings.get(idx as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.strings.iter().map(String::as_str)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModuleKind {
    Relocatable = 0,
    SharedLib = 1,
    Executable = 2,
}

impl ModuleKind {
    pub fn from_u8(b: u8) -> Option<ModuleKind> {
        match b {
            0 => Some(ModuleKind::Relocatable),
            1 => Some(ModuleKind::SharedLib),
            2 => Some(ModuleKind::Executable),
            _ => None,
        }
    }

    pub fn is_linked(self) -> bool {
        self != ModuleKind::Relocatable
    }

    pub fn extension(self) -> &'static str {
        match self {
            ModuleKind::Relocatable => "faco",
            ModuleKind::SharedLib => "facl",
            ModuleKind::Executable => "facx",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SymbolKind {
    Func = 0,
    Data = 1,
}

impl SymbolKind {
    pub fn from_u8(b: u8) -> Option<SymbolKind> {
        match b {
            0 => Some(SymbolKind::Func),
            1 => Some(SymbolKind::Data),
            _ => None,
        }
    }
}

impl fmt::Display for SymbolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SymbolKind::Func => "FUNC",
            SymbolKind::Data => "DATA",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Binding {
    Defined = 0,
    Undefined = 1,
    WeakUndefined = 2,
}

impl Binding {
    pub fn from_u8(b: u8) -> Option<Binding> {
        match b {
            0 => Some(Binding::Defined),
            1 => Some(Binding::Undefined),
            2 => Some(Binding::WeakUndefined),
            _ => None,
        }
    }

    pub fn is_defined(self) -> bool {
        self == Binding::Defined
    }
}

impl fmt::Display for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Binding::Defined => "DEFINED",
            Binding::Undefined => "UNDEFINED",
            Binding::WeakUndefined => "WEAK_UNDEFINED",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SymbolEntry {
    pub name: u32,
    pub kind: SymbolKind,
    pub binding: Binding,
    /// Function index (FUNC) or data slot (DATA); only for defined symbols.
    pub location: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RelocKind {
    GotSlot = 0,
    PltSlot = 1,
}

impl RelocKind {
    pub fn from_u8(b: u8) -> Option<RelocKind> {
        match b {
            0 => Some(RelocKind::GotSlot),
            1 => Some(RelocKind::PltSlot),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelocSite {
    pub func: u32,
    pub instr: u32,
    pub operand: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Relocation {
    pub site: RelocSite,
    /// Index into the module symbol table.
    pub symbol: u32,
    pub kind: RelocKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DataInit {
    Int(i64),
    Str(u32),
    NullHandle,
    NullFuncRef,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Function {
    pub name: u32,
    pub nparams: u32,
    /// Total local slots, parameters included.
    pub nlocals: u32,
    pub code: Vec<Instruction>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectModule {
    pub name: u32,
    pub kind: ModuleKind,
    pub strings: StringPool,
    pub needed: Vec<u32>,
    pub symbols: Vec<SymbolEntry>,
    pub relocations: Vec<Relocation>,
    pub data: Vec<DataInit>,
    pub functions: Vec<Function>,
}

impl ObjectModule {
    pub fn new(name: &str, kind: ModuleKind) -> Self {
        let mut strings = StringPool::new();
        let name = strings.intern(name);
        ObjectModule {
            name,
            kind,
            strings,
            needed: Vec::new(),
            symbols: Vec::new(),
            relocations: Vec::new(),
            data: Vec::new(),
            functions: Vec::new(),
        }
    }

    pub fn str(&self, idx: u32) -> &str {
        self.strings.get(idx).unwrap_or("<bad string index>")
    }

    pub fn name(&self) -> &str {
        self.str(self.name)
    }

    pub fn needed_names(&self) -> Vec<&str> {
        self.needed.iter().map(|&i| self.str(i)).collect()
    }

    pub fn symbol_name(&self, sym: &SymbolEntry) -> &str {
        self.str(sym.name)
    }

    pub fn find_symbol(&self, name: &str) -> Option<(usize, &SymbolEntry)> {
        let idx = self.strings.lookup(name)?;
        self.symbols.iter().enumerate().find(|(_, s)| s.name == idx)
    }

    /// A definition of `name`, if this module provides one.
    pub fn definition(&self, name: &str) -> Option<&SymbolEntry> {
        self.find_symbol(name)
            .map(|(_, s)| s)
            .filter(|s| s.binding.is_defined())
    }

    pub fn function_by_name(&self, name: &str) -> Option<u32> {
        match self.definition(name) {
            Some(SymbolEntry {
                kind: SymbolKind::Func,
                location: Some(loc),
                ..
            }) => Some(*loc),
            _ => None,
        }
    }

    pub fn undefined_symbols(&self) -> impl Iterator<Item = &SymbolEntry> {
        self.symbols.iter().filter(|s| !s.binding.is_defined())
    }

    pub fn instruction_count(&self) -> usize {
        self.functions.iter().map(|f| f.code.len()).sum()
    }

    pub fn add_needed(&mut self, lib: &str) {
        let idx = self.strings.intern(lib);
        self.needed.push(idx);
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        validate::validate(self)
    }

    /// Human-readable listing of symbols, relocations and code.
    pub fn disassemble(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let kind = match self.kind {
            ModuleKind::Relocatable => "RELOCATABLE",
            ModuleKind::SharedLib => "SHARED_LIB",
            ModuleKind::Executable => "EXECUTABLE",
        };
        let _ = writeln!(out, "module {} ({kind})", self.name());
        for n in self.needed_names() {
            let _ = writeln!(out, "needed {n}");
        }
        for (i, d) in self.data.iter().enumerate() {
            let v = match d {
                DataInit::Int(k) => k.to_string(),
                DataInit::Str(s) => format!("{:?}", self.str(*s)),
                DataInit::NullHandle => "null handle".into(),
                DataInit::NullFuncRef => "null fnref".into(),
            };
            let _ = writeln!(out, "data {i} = {v}");
        }
        for f in &self.functions {
            let _ = writeln!(
                out,
                "func {} params={} locals={}",
                self.str(f.name),
                f.nparams,
                f.nlocals
            );
            for (i, ins) in f.code.iter().enumerate() {
                let _ = writeln!(out, "  {i:4}  {ins}");
            }
        }
        out
    }
}
