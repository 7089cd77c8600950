//! Runtime-opened libraries. They live in the same module arena as startup
//! libraries but are never visible to the startup GOTs.

use std::collections::BTreeMap;

use super::{LoadError, ProcessImage};
use crate::isa::TrapCode;
use crate::object::SymbolKind;
use crate::vm::value::CodeAddr;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DlEntry {
    pub name: String,
    pub handle: u32,
    pub refcount: u32,
    /// Root module first, then its dependencies.
    pub modules: Vec<u32>,
}

#[derive(Debug, Default)]
pub(super) struct Namespace {
    open: BTreeMap<u32, DlEntry>,
    next_handle: u32,
    /// How many times each library file was actually loaded at runtime.
    loads: BTreeMap<String, u32>,
}

impl ProcessImage {
    /// Open `name` from the search path. `Ok(None)` when it is not found.
    pub fn dl_open(&mut self, name: &str) -> Result<Option<u32>, LoadError> {
        if let Some(e) = self.dl.open.values_mut().find(|e| e.name == name) {
            e.refcount += 1;
            return Ok(Some(e.handle));
        }
        if self.search.locate(name).is_none() {
            return Ok(None);
        }
        let (modules, _absent) = self.load_closure(vec![name.to_owned()], &[])?;
        for &m in &modules {
            if let Err(e) = self.bind_module(m, &modules) {
                for &m in &modules {
                    self.modules[m as usize] = None;
                }
                return Err(e);
            }
        }
        self.dl.next_handle += 1;
        let handle = self.dl.next_handle;
        *self.dl.loads.entry(name.to_owned()).or_default() += 1;
        self.dl.open.insert(
            handle,
            DlEntry {
                name: name.to_owned(),
                handle,
                refcount: 1,
                modules,
            },
        );
        Ok(Some(handle))
    }

    /// Function `name` defined by the library behind `handle`.
    pub fn dl_sym(&self, handle: u32, name: &str) -> Result<Option<CodeAddr>, TrapCode> {
        let e = self.dl.open.get(&handle).ok_or(TrapCode::StaleHandle)?;
        let root = e.modules[0];
        let lm = self.module(root).ok_or(TrapCode::StaleHandle)?;
        Ok(match lm.module.definition(name) {
            Some(s) if s.kind == SymbolKind::Func => {
                s.location.map(|func| CodeAddr { module: root, func })
            }
            _ => None,
        })
    }

    pub fn dl_close(&mut self, handle: u32) -> Result<(), TrapCode> {
        let e = self.dl.open.get_mut(&handle).ok_or(TrapCode::StaleHandle)?;
        e.refcount -= 1;
        if e.refcount == 0 {
            let e = self.dl.open.remove(&handle).expect("entry just seen");
            for m in e.modules {
                self.modules[m as usize] = None;
            }
        }
        Ok(())
    }

    pub fn dl_entries(&self) -> impl Iterator<Item = &DlEntry> {
        self.dl.open.values()
    }

    /// Number of times `name` has been loaded by [`ProcessImage::dl_open`].
    pub fn dl_load_count(&self, name: &str) -> u32 {
        self.dl.loads.get(name).copied().unwrap_or(0)
    }

    pub fn dl_load_counts(&self) -> impl Iterator<Item = (&str, u32)> {
        self.dl.loads.iter().map(|(k, v)| (k.as_str(), *v))
    }
}
