use std::fmt::Write;

use super::{GotSlotState, ProcessImage, Target};
use crate::object::SymbolKind;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GotRow {
    /// Module owning the GOT.
    pub module: String,
    pub index: u32,
    pub symbol: String,
    pub kind: SymbolKind,
    /// Library that defines the symbol; `None` when it is absent.
    pub provider: Option<String>,
    pub state: GotSlotState,
}

/// GOT contents of every startup module plus library lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GotReport {
    pub rows: Vec<GotRow>,
    pub loaded: Vec<String>,
    pub absent: Vec<String>,
    /// `(name, handle, refcount)` for libraries currently open at runtime.
    pub dl_open: Vec<(String, u32, u32)>,
    /// `(name, loads)` over the lifetime of the process.
    pub dl_loads: Vec<(String, u32)>,
}

impl GotReport {
    pub fn null_symbols(&self) -> Vec<&str> {
        self.rows
            .iter()
            .filter(|r| r.state.is_null())
            .map(|r| r.symbol.as_str())
            .collect()
    }

    pub fn row(&self, symbol: &str) -> Option<&GotRow> {
        self.rows.iter().find(|r| r.symbol == symbol)
    }

    /// Tab-separated, one record per line:
    ///
    /// ```text
    /// GOT     module  index  symbol  FUNC|DATA  provider|ABSENT  state
    /// LOADED  name
    /// ABSENT  name
    /// DL      name    handle refcount
    /// DLLOADS name    count
    /// ```
    pub fn render(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "GOT\t{}\t{}\t{}\t{}\t{}\t{}",
                r.module,
                r.index,
                r.symbol,
                r.kind,
                r.provider.as_deref().unwrap_or("ABSENT"),
                r.state
            );
        }
        for l in &self.loaded {
            let _ = writeln!(out, "LOADED\t{l}");
        }
        for l in &self.absent {
            let _ = writeln!(out, "ABSENT\t{l}");
        }
        for (n, h, rc) in &self.dl_open {
            let _ = writeln!(out, "DL\t{n}\t{h}\t{rc}");
        }
        for (n, c) in &self.dl_loads {
            let _ = writeln!(out, "DLLOADS\t{n}\t{c}");
        }
        out
    }
}

pub(super) fn inspect(p: &ProcessImage) -> GotReport {
    let mut rows = Vec::new();
    for &m in &p.startup {
        let Some(lm) = p.module(m) else { continue };
        for (i, (entry, state)) in lm.layout.got.iter().zip(&lm.got).enumerate() {
            let provider = match state {
                GotSlotState::NullSentinel | GotSlotState::PoisonedData => None,
                GotSlotState::Bound(Target::Code(a)) => {
                    p.module(a.module).map(|t| t.name().to_owned())
                }
                GotSlotState::Bound(Target::Data(a)) => {
                    p.module(a.module).map(|t| t.name().to_owned())
                }
                GotSlotState::LazyStub(_) => p.provider_of(m, &entry.name).map(str::to_owned),
            };
            rows.push(GotRow {
                module: lm.name().to_owned(),
                index: i as u32,
                symbol: entry.name.clone(),
                kind: entry.kind,
                provider,
                state: *state,
            });
        }
    }
    GotReport {
        rows,
        loaded: p.loaded_libs().into_iter().map(str::to_owned).collect(),
        absent: p.absent_libs().to_vec(),
        dl_open: p
            .dl_entries()
            .map(|e| (e.name.clone(), e.handle, e.refcount))
            .collect(),
        dl_loads: p.dl_load_counts().map(|(n, c)| (n.to_owned(), c)).collect(),
    }
}
