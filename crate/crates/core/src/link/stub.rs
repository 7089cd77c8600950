use std::collections::HashSet;

use thiserror::Error;

use super::LinkError;
use crate::isa::{Instruction, TrapCode};
use crate::object::{
    Binding, DataInit, Function, ModuleKind, ObjectModule, SymbolEntry, SymbolKind,
};

/// Contents of a dummy library.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StubSpec {
    pub lib_name: String,
    /// `(name, arity)`
    pub functions: Vec<(String, u32)>,
    pub variables: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct StubSpecError {
    pub line: usize,
    pub message: String,
}

/// Parse a stub description: one `func name/arity` or `var name` per line.
/// Blank lines and `#` comments are ignored.
pub fn parse_stub_spec(lib_name: &str, text: &str) -> Result<StubSpec, StubSpecError> {
    let mut spec = StubSpec {
        lib_name: lib_name.to_owned(),
        ..Default::default()
    };
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| StubSpecError {
            line: i + 1,
            message,
        };
        let (kw, rest) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| err(format!("expected a declaration, got `{line}`")))?;
        let rest = rest.trim();
        match kw {
            "func" => {
                let (name, arity) = rest
                    .split_once('/')
                    .ok_or_else(|| err("expected `func name/arity`".into()))?;
                let arity = arity
                    .trim()
                    .parse()
                    .map_err(|_| err(format!("bad arity `{}`", arity.trim())))?;
                check_ident(name.trim()).map_err(err)?;
                spec.functions.push((name.trim().to_owned(), arity));
            }
            "var" => {
                check_ident(rest).map_err(err)?;
                spec.variables.push(rest.to_owned());
            }
            other => return Err(err(format!("unknown declaration kind `{other}`"))),
        }
    }
    Ok(spec)
}

fn check_ident(name: &str) -> Result<(), String> {
    let mut chars = name.chars();
    let ok = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
    if ok {
        Ok(())
    } else {
        Err(format!("bad symbol name `{name}`"))
    }
}

/// A shared library whose functions trap with `STUB_CALLED` and whose
/// variables are zero.
pub fn gen_stub(spec: &StubSpec) -> Result<ObjectModule, LinkError> {
    let mut seen = HashSet::new();
    for n in spec.functions.iter().map(|(n, _)| n).chain(&spec.variables) {
        if !seen.insert(n.as_str()) {
            return Err(LinkError::DuplicateSymbol {
                name: n.clone(),
                first: spec.lib_name.clone(),
                second: spec.lib_name.clone(),
            });
        }
    }
    let mut m = ObjectModule::new(&spec.lib_name, ModuleKind::SharedLib);
    for (i, (name, arity)) in spec.functions.iter().enumerate() {
        let name = m.strings.intern(name);
        m.functions.push(Function {
            name,
            nparams: *arity,
            nlocals: *arity,
            code: vec![Instruction::Trap(TrapCode::StubCalled)],
        });
        m.symbols.push(SymbolEntry {
            name,
            kind: SymbolKind::Func,
            binding: Binding::Defined,
            location: Some(i as u32),
        });
    }
    for (i, name) in spec.variables.iter().enumerate() {
        let name = m.strings.intern(name);
        m.data.push(DataInit::Int(0));
        m.symbols.push(SymbolEntry {
            name,
            kind: SymbolKind::Data,
            binding: Binding::Defined,
            location: Some(i as u32),
        });
    }
    m.validate()
        .expect("stub libraries are valid by construction");
    Ok(m)
}
