use thiserror::Error;

use crate::isa::{Instruction, Opcode, OperandError};

use super::encode::{DATA_INT, DATA_NULL_FUNCREF, DATA_NULL_HANDLE, DATA_STR};
use super::{
    Binding, DataInit, Function, Location, ModuleKind, ObjectModule, RelocKind, RelocSite,
    Relocation, StringPool, SymbolEntry, SymbolKind, MAGIC, NO_LOCATION, VERSION,
};

/// Malformed FACM input. `offset` is the byte position the problem was found
/// at; truncation is reported at the end of the available input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("format error at offset {offset}: {reason}")]
pub struct FormatError {
    pub offset: usize,
    pub reason: String,
}

fn err<T>(offset: usize, reason: impl Into<String>) -> Result<T, FormatError> {
    Err(FormatError {
        offset,
        reason: reason.into(),
    })
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
    /// End of the current section.
    end: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], FormatError> {
        if self.pos + n > self.data.len() {
            return err(self.data.len(), format!("truncated {what}"));
        }
        if self.pos + n > self.end {
            return err(self.pos, format!("{what} overruns its section"));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self, what: &str) -> Result<u8, FormatError> {
        Ok(self.take(1, what)?[0])
    }
    fn u16(&mut self, what: &str) -> Result<u16, FormatError> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }
    fn u32(&mut self, what: &str) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
    fn i64(&mut self, what: &str) -> Result<i64, FormatError> {
        Ok(i64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn open_section(&mut self, tag: &[u8; 4]) -> Result<(), FormatError> {
        self.end = self.data.len();
        let name = std::str::from_utf8(tag).unwrap();
        let at = self.pos;
        if self.take(4, &format!("{name} tag"))? != tag {
            return err(at, format!("expected {name} section"));
        }
        let len = self.u32(&format!("{name} length"))? as usize;
        if self.pos + len > self.data.len() {
            return err(self.data.len(), format!("truncated {name} section"));
        }
        self.end = self.pos + len;
        Ok(())
    }

    fn close_section(&mut self, tag: &[u8; 4]) -> Result<(), FormatError> {
        if self.pos != self.end {
            let name = std::str::from_utf8(tag).unwrap();
            return err(self.pos, format!("{name} section has trailing bytes"));
        }
        Ok(())
    }
}

/// Byte offsets of the records decoded, used to report validation failures.
#[derive(Default)]
struct Offsets {
    header_kind: usize,
    need: Vec<usize>,
    syms: Vec<usize>,
    rels: Vec<usize>,
    data: Vec<usize>,
    funcs: Vec<usize>,
    instrs: Vec<Vec<usize>>,
}

impl Offsets {
    fn of(&self, loc: Location) -> usize {
        match loc {
            Location::Header => self.header_kind,
            Location::Need(i) => self.need[i],
            Location::Symbol(i) => self.syms[i],
            Location::Relocation(i) => self.rels[i],
            Location::Data(i) => self.data[i],
            Location::Function(i) => self.funcs[i],
            Location::Instruction(f, i) => self.instrs[f][i],
        }
    }
}

/// Parse FACM bytes. Every index the module carries is validated before the
/// module is returned.
pub fn decode_module(b: &[u8]) -> Result<ObjectModule, FormatError> {
    if b.len() < MAGIC.len() {
        if MAGIC.starts_with(b) {
            return err(b.len(), "truncated header");
        }
        return err(0, "bad magic");
    }
    if b[..4] != MAGIC {
        return err(0, "bad magic");
    }
    let mut r = Reader {
        data: b,
        pos: 4,
        end: b.len(),
    };
    let mut off = Offsets::default();

    let version = r.u16("header")?;
    if version != VERSION {
        return err(4, format!("unsupported version {version}"));
    }
    off.header_kind = r.pos;
    let kind_byte = r.u8("header")?;
    let kind = ModuleKind::from_u8(kind_byte).ok_or_else(|| FormatError {
        offset: off.header_kind,
        reason: format!("bad module kind {kind_byte}"),
    })?;
    let name = r.u32("header")?;

    r.open_section(b"STRS")?;
    let n = r.u32("string count")?;
    let mut strings = Vec::new();
    for _ in 0..n {
        let len = r.u32("string length")? as usize;
        let at = r.pos;
        let bytes = r.take(len, "string")?;
        match std::str::from_utf8(bytes) {
            Ok(s) => strings.push(s.to_owned()),
            Err(_) => return err(at, "string is not UTF-8"),
        }
    }
    r.close_section(b"STRS")?;

    r.open_section(b"NEED")?;
    let n = r.u32("needed count")?;
    let mut needed = Vec::new();
    for _ in 0..n {
        off.need.push(r.pos);
        needed.push(r.u32("needed entry")?);
    }
    r.close_section(b"NEED")?;

    r.open_section(b"SYMS")?;
    let n = r.u32("symbol count")?;
    let mut symbols = Vec::new();
    for _ in 0..n {
        let at = r.pos;
        off.syms.push(at);
        let name = r.u32("symbol")?;
        let kind = r.u8("symbol")?;
        let binding = r.u8("symbol")?;
        let location = r.u32("symbol")?;
        let kind = SymbolKind::from_u8(kind).ok_or_else(|| FormatError {
            offset: at + 4,
            reason: format!("bad symbol kind {kind}"),
        })?;
        let binding = Binding::from_u8(binding).ok_or_else(|| FormatError {
            offset: at + 5,
            reason: format!("bad symbol binding {binding}"),
        })?;
        let location = (location != NO_LOCATION).then_some(location);
        symbols.push(SymbolEntry {
            name,
            kind,
            binding,
            location,
        });
    }
    r.close_section(b"SYMS")?;

    r.open_section(b"RELS")?;
    let n = r.u32("relocation count")?;
    let mut relocations = Vec::new();
    for _ in 0..n {
        let at = r.pos;
        off.rels.push(at);
        let func = r.u32("relocation")?;
        let instr = r.u32("relocation")?;
        let operand = r.u8("relocation")?;
        let symbol = r.u32("relocation")?;
        let kind = r.u8("relocation")?;
        let kind = RelocKind::from_u8(kind).ok_or_else(|| FormatError {
            offset: at + 13,
            reason: format!("bad relocation kind {kind}"),
        })?;
        relocations.push(Relocation {
            site: RelocSite {
                func,
                instr,
                operand,
            },
            symbol,
            kind,
        });
    }
    r.close_section(b"RELS")?;

    r.open_section(b"DATA")?;
    let n = r.u32("data count")?;
    let mut data = Vec::new();
    for _ in 0..n {
        let at = r.pos;
        off.data.push(at);
        let tag = r.u8("data entry")?;
        let payload = r.i64("data entry")?;
        data.push(match tag {
            DATA_INT => DataInit::Int(payload),
            DATA_STR => match u32::try_from(payload) {
                Ok(s) => DataInit::Str(s),
                Err(_) => return err(at + 1, "data string index out of range"),
            },
            DATA_NULL_HANDLE | DATA_NULL_FUNCREF if payload != 0 => {
                return err(at + 1, "null data entry with nonzero payload")
            }
            DATA_NULL_HANDLE => DataInit::NullHandle,
            DATA_NULL_FUNCREF => DataInit::NullFuncRef,
            other => return err(at, format!("bad data tag {other}")),
        });
    }
    r.close_section(b"DATA")?;

    r.open_section(b"CODE")?;
    let n = r.u32("function count")?;
    let mut functions = Vec::new();
    for _ in 0..n {
        off.funcs.push(r.pos);
        let name = r.u32("function header")?;
        let nparams = r.u32("function header")?;
        let nlocals = r.u32("function header")?;
        let ninstr = r.u32("function header")?;
        let mut code = Vec::new();
        let mut at_list = Vec::new();
        for _ in 0..ninstr {
            let at = r.pos;
            at_list.push(at);
            let byte = r.u8("instruction")?;
            let op = Opcode::from_u8(byte).ok_or_else(|| FormatError {
                offset: at,
                reason: format!("unknown opcode {byte:#04x}"),
            })?;
            let mut ops = [0u32; 2];
            for slot in ops.iter_mut().take(op.operand_count()) {
                *slot = r.u32("instruction operand")?;
            }
            let ins = Instruction::from_parts(op, &ops[..op.operand_count()]).map_err(|e| {
                let reason = match e {
                    OperandError::BadNullKind(k) => format!("bad LOADN kind {k}"),
                    OperandError::BadTrapCode(c) => format!("bad trap code {c}"),
                };
                FormatError {
                    offset: at + 1,
                    reason,
                }
            })?;
            code.push(ins);
        }
        off.instrs.push(at_list);
        functions.push(Function {
            name,
            nparams,
            nlocals,
            code,
        });
    }
    r.close_section(b"CODE")?;

    if r.pos != b.len() {
        return err(r.pos, "trailing bytes after CODE section");
    }

    let module = ObjectModule {
        name,
        kind,
        strings: StringPool::from_strings(strings),
        needed,
        symbols,
        relocations,
        data,
        functions,
    };
    module.validate().map_err(|e| FormatError {
        offset: off.of(e.location),
        reason: e.reason,
    })?;
    Ok(module)
}
