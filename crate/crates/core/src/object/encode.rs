use thiserror::Error;

use super::{DataInit, ObjectModule, ValidationError, MAGIC, NO_LOCATION, VERSION};

#[derive(Debug, Error)]
#[error("cannot encode `{module}`: {source}")]
pub struct EncodeError {
    pub module: String,
    #[source]
    pub source: ValidationError,
}

pub(super) const DATA_INT: u8 = 0;
pub(super) const DATA_STR: u8 = 1;
pub(super) const DATA_NULL_HANDLE: u8 = 2;
pub(super) const DATA_NULL_FUNCREF: u8 = 3;

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn i64(&mut self, v: i64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn len(&mut self, n: usize) {
        self.u32(u32::try_from(n).expect("section too large"));
    }

    /// Tag, then a u32 length patched in after `body` runs.
    fn section(&mut self, tag: &[u8; 4], body: impl FnOnce(&mut Writer)) {
        self.buf.extend_from_slice(tag);
        let at = self.buf.len();
        self.u32(0);
        body(self);
        let n = (self.buf.len() - at - 4) as u32;
        self.buf[at..at + 4].copy_from_slice(&n.to_le_bytes());
    }
}

/// Serialize a module to FACM bytes. Output is a pure function of the module.
pub fn encode_module(m: &ObjectModule) -> Result<Vec<u8>, EncodeError> {
    m.validate().map_err(|source| EncodeError {
        module: m.name().to_owned(),
        source,
    })?;

    let mut w = Writer { buf: Vec::new() };
    w.buf.extend_from_slice(&MAGIC);
    w.u16(VERSION);
    w.u8(m.kind as u8);
    w.u32(m.name);

    w.section(b"STRS", |w| {
        w.len(m.strings.len());
        for s in m.strings.iter() {
            w.len(s.len());
            w.buf.extend_from_slice(s.as_bytes());
        }
    });
    w.section(b"NEED", |w| {
        w.len(m.needed.len());
        for &n in &m.needed {
            w.u32(n);
        }
    });
    w.section(b"SYMS", |w| {
        w.len(m.symbols.len());
        for s in &m.symbols {
            w.u32(s.name);
            w.u8(s.kind as u8);
            w.u8(s.binding as u8);
            w.u32(s.location.unwrap_or(NO_LOCATION));
        }
    });
    w.section(b"RELS", |w| {
        w.len(m.relocations.len());
        for r in &m.relocations {
            w.u32(r.site.func);
            w.u32(r.site.instr);
            w.u8(r.site.operand);
            w.u32(r.symbol);
            w.u8(r.kind as u8);
        }
    });
    w.section(b"DATA", |w| {
        w.len(m.data.len());
        for d in &m.data {
            match *d {
                DataInit::Int(k) => {
                    w.u8(DATA_INT);
                    w.i64(k);
                }
                DataInit::Str(s) => {
                    w.u8(DATA_STR);
                    w.i64(s as i64);
                }
                DataInit::NullHandle => {
                    w.u8(DATA_NULL_HANDLE);
                    w.i64(0);
                }
                DataInit::NullFuncRef => {
                    w.u8(DATA_NULL_FUNCREF);
                    w.i64(0);
                }
            }
        }
    });
    w.section(b"CODE", |w| {
        w.len(m.functions.len());
        for f in &m.functions {
            w.u32(f.name);
            w.u32(f.nparams);
            w.u32(f.nlocals);
            w.len(f.code.len());
            for ins in &f.code {
                w.u8(ins.opcode() as u8);
                for op in ins.operands() {
                    w.u32(op);
                }
            }
        }
    });
    Ok(w.buf)
}
