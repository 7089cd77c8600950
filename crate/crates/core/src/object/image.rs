use thiserror::Error;

use super::{ModuleKind, ObjectModule, SymbolKind, ValidationError};

/// One GOT slot: the external symbol it stands for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GotEntry {
    pub name: String,
    pub kind: SymbolKind,
    pub weak: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PltEntry {
    pub name: String,
    /// GOT slot the PLT entry reads its target from.
    pub got: u32,
}

/// GOT and PLT layouts of a linked module.
///
/// Slot `i` of the GOT belongs to the `i`-th undefined symbol in symbol-table
/// order; the PLT lists the undefined functions in the same order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SlotLayout {
    pub got: Vec<GotEntry>,
    pub plt: Vec<PltEntry>,
}

impl SlotLayout {
    pub fn of(m: &ObjectModule) -> SlotLayout {
        let mut layout = SlotLayout::default();
        for sym in m.undefined_symbols() {
            let got = layout.got.len() as u32;
            let name = m.symbol_name(sym).to_owned();
            if sym.kind == SymbolKind::Func {
                layout.plt.push(PltEntry {
                    name: name.clone(),
                    got,
                });
            }
            layout.got.push(GotEntry {
                name,
                kind: sym.kind,
                weak: sym.binding == super::Binding::WeakUndefined,
            });
        }
        layout
    }

    pub fn got_index(&self, name: &str) -> Option<u32> {
        self.got
            .iter()
            .position(|e| e.name == name)
            .map(|i| i as u32)
    }

    pub fn plt_index(&self, name: &str) -> Option<u32> {
        self.plt
            .iter()
            .position(|e| e.name == name)
            .map(|i| i as u32)
    }
}

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("`{0}` is not an executable")]
    NotExecutable(String),
    #[error("invalid executable: {0}")]
    Invalid(#[from] ValidationError),
}

/// A linked program ready for loading.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutableImage {
    pub module: ObjectModule,
    pub layout: SlotLayout,
    /// Function index of `main`.
    pub entry: u32,
}

impl ExecutableImage {
    pub fn new(module: ObjectModule) -> Result<ExecutableImage, ImageError> {
        if module.kind != ModuleKind::Executable {
            return Err(ImageError::NotExecutable(module.name().to_owned()));
        }
        module.validate()?;
        let entry = module
            .function_by_name("main")
            .expect("validated executable has main");
        let layout = SlotLayout::of(&module);
        Ok(ExecutableImage {
            module,
            layout,
            entry,
        })
    }

    pub fn got_layout(&self) -> Vec<&str> {
        self.layout.got.iter().map(|e| e.name.as_str()).collect()
    }

    pub fn plt_layout(&self) -> Vec<&str> {
        self.layout.plt.iter().map(|e| e.name.as_str()).collect()
    }
}
