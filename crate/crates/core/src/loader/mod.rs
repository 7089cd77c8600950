//! Tolerant program loader.
//!
//! Needed libraries are located on a search path and loaded breadth-first.
//! A missing library is not an error: GOT slots of the functions it would
//! have provided are set to the null sentinel, and those of its variables are
//! poisoned.

mod dl;
mod inspect;
mod search;

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::isa::TrapCode;
use crate::object::{
    decode_module, ExecutableImage, FormatError, ImageError, ModuleKind, ObjectModule, SlotLayout,
    SymbolKind,
};
use crate::vm::value::{CodeAddr, DataAddr, RuntimeValue};

pub use dl::DlEntry;
pub use inspect::{GotReport, GotRow};
pub use search::{SearchPath, LIBRARY_PATH_VAR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BindPolicy {
    Eager,
    #[default]
    Lazy,
}

impl BindPolicy {
    pub fn parse(s: &str) -> Option<BindPolicy> {
        match s {
            "eager" => Some(BindPolicy::Eager),
            "lazy" => Some(BindPolicy::Lazy),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BindPolicy::Eager => "eager",
            BindPolicy::Lazy => "lazy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Code(CodeAddr),
    Data(DataAddr),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GotSlotState {
    Bound(Target),
    /// The function's library is absent. This is what an availability check
    /// tests for.
    NullSentinel,
    /// Available but not yet resolved; holds the PLT index.
    LazyStub(u32),
    /// The variable's library is absent; any access traps.
    PoisonedData,
}

impl GotSlotState {
    pub fn is_null(&self) -> bool {
        matches!(self, GotSlotState::NullSentinel)
    }

    pub fn label(&self) -> &'static str {
        match self {
            GotSlotState::Bound(_) => "BOUND",
            GotSlotState::NullSentinel => "NULL_SENTINEL",
            GotSlotState::LazyStub(_) => "LAZY_STUB",
            GotSlotState::PoisonedData => "POISONED_DATA",
        }
    }
}

impl fmt::Display for GotSlotState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("executable `{}` not found", .0.display())]
    MissingExecutable(PathBuf),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: format error at offset {}: {}", path.display(), source.offset, source.reason)]
    Format { path: PathBuf, source: FormatError },
    #[error("{}: expected a shared library", .0.display())]
    NotSharedLib(PathBuf),
    #[error(
        "`{name}` is referenced as {used} in `{module}` but `{provider}` defines it as {defined}"
    )]
    KindMismatch {
        name: String,
        module: String,
        provider: String,
        used: SymbolKind,
        defined: SymbolKind,
    },
    #[error(transparent)]
    Image(#[from] ImageError),
}

impl LoadError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LoadError::Format { .. } => TrapCode::FormatError.exit_code(),
            _ => 1,
        }
    }
}

/// A module resident in the process, with its own GOT and data memory.
#[derive(Debug, Clone)]
pub struct LoadedModule {
    pub module: ObjectModule,
    pub layout: SlotLayout,
    pub got: Vec<GotSlotState>,
    pub data: Vec<RuntimeValue>,
    /// Modules searched, in order, when resolving this module's GOT.
    pub scope: Vec<u32>,
    pub path: Option<PathBuf>,
}

impl LoadedModule {
    fn new(module: ObjectModule, path: Option<PathBuf>) -> LoadedModule {
        let layout = SlotLayout::of(&module);
        let data = module
            .data
            .iter()
            .map(|d| RuntimeValue::from_init(d, &module.strings))
            .collect();
        LoadedModule {
            module,
            layout,
            got: Vec::new(),
            data,
            scope: Vec::new(),
            path,
        }
    }

    pub fn name(&self) -> &str {
        self.module.name()
    }
}

/// An executable together with everything the loader brought in for it.
#[derive(Debug)]
pub struct ProcessImage {
    /// Module arena. Slot 0 is the executable; startup libraries follow in
    /// load order; runtime-opened libraries after that. Unloaded slots are
    /// `None` and never reused.
    modules: Vec<Option<LoadedModule>>,
    startup: Vec<u32>,
    absent: Vec<String>,
    policy: BindPolicy,
    search: SearchPath,
    entry: u32,
    lazy_resolutions: u64,
    dl: dl::Namespace,
}

/// Load `image` and its needed libraries.
pub fn load(
    image: ExecutableImage,
    search: &SearchPath,
    policy: BindPolicy,
) -> Result<ProcessImage, LoadError> {
    let entry = image.entry;
    let needed: Vec<String> = image
        .module
        .needed_names()
        .into_iter()
        .map(str::to_owned)
        .collect();
    let mut p = ProcessImage {
        modules: vec![Some(LoadedModule::new(image.module, None))],
        startup: vec![0],
        absent: Vec::new(),
        policy,
        search: search.clone(),
        entry,
        lazy_resolutions: 0,
        dl: dl::Namespace::default(),
    };
    let (loaded, absent) = p.load_closure(needed, &[])?;
    p.startup.extend(loaded);
    p.absent = absent;
    let scope = p.startup.clone();
    for &m in &scope {
        p.bind_module(m, &scope)?;
    }
    Ok(p)
}

/// Read, decode and load an executable file.
pub fn load_file(
    path: &Path,
    search: &SearchPath,
    policy: BindPolicy,
) -> Result<ProcessImage, LoadError> {
    let image = read_executable(path)?;
    load(image, search, policy)
}

pub fn read_executable(path: &Path) -> Result<ExecutableImage, LoadError> {
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(LoadError::MissingExecutable(path.to_owned()))
        }
        Err(source) => {
            return Err(LoadError::Io {
                path: path.to_owned(),
                source,
            })
        }
    };
    let module = decode_module(&bytes).map_err(|source| LoadError::Format {
        path: path.to_owned(),
        source,
    })?;
    Ok(ExecutableImage::new(module)?)
}

fn read_library(path: &Path) -> Result<ObjectModule, LoadError> {
    let bytes = std::fs::read(path).map_err(|source| LoadError::Io {
        path: path.to_owned(),
        source,
    })?;
    let module = decode_module(&bytes).map_err(|source| LoadError::Format {
        path: path.to_owned(),
        source,
    })?;
    if module.kind != ModuleKind::SharedLib {
        return Err(LoadError::NotSharedLib(path.to_owned()));
    }
    Ok(module)
}

impl ProcessImage {
    /// Breadth-first load of `roots` and their needed libraries, skipping
    /// names in `skip`. Returns the new module ids and the names not found.
    fn load_closure(
        &mut self,
        roots: Vec<String>,
        skip: &[&str],
    ) -> Result<(Vec<u32>, Vec<String>), LoadError> {
        let mut queue: VecDeque<String> = roots.into();
        let mut seen: HashMap<String, ()> = skip.iter().map(|s| ((*s).to_owned(), ())).collect();
        let mut loaded = Vec::new();
        let mut absent = Vec::new();
        while let Some(name) = queue.pop_front() {
            if seen.insert(name.clone(), ()).is_some() {
                continue;
            }
            let Some(path) = self.search.locate(&name) else {
                absent.push(name);
                continue;
            };
            let module = read_library(&path)?;
            queue.extend(module.needed_names().into_iter().map(str::to_owned));
            let id = self.modules.len() as u32;
            self.modules
                .push(Some(LoadedModule::new(module, Some(path))));
            loaded.push(id);
        }
        Ok((loaded, absent))
    }

    /// First definition of `name` in `scope`.
    fn lookup(&self, scope: &[u32], name: &str) -> Option<(u32, SymbolKind, u32)> {
        scope.iter().find_map(|&m| {
            let lm = self.modules[m as usize].as_ref()?;
            let s = lm.module.definition(name)?;
            Some((m, s.kind, s.location?))
        })
    }

    fn bind_module(&mut self, id: u32, scope: &[u32]) -> Result<(), LoadError> {
        let lm = self.modules[id as usize]
            .as_ref()
            .expect("module being bound is resident");
        let mut got = Vec::with_capacity(lm.layout.got.len());
        for entry in &lm.layout.got {
            let state = match self.lookup(scope, &entry.name) {
                Some((m, kind, _)) if kind != entry.kind => {
                    return Err(LoadError::KindMismatch {
                        name: entry.name.clone(),
                        module: lm.name().to_owned(),
                        provider: self
                            .module(m)
                            .map(|p| p.name().to_owned())
                            .unwrap_or_default(),
                        used: entry.kind,
                        defined: kind,
                    })
                }
                Some((m, SymbolKind::Func, loc)) => match self.policy {
                    BindPolicy::Eager => GotSlotState::Bound(Target::Code(CodeAddr {
                        module: m,
                        func: loc,
                    })),
                    BindPolicy::Lazy => GotSlotState::LazyStub(
                        lm.layout
                            .plt_index(&entry.name)
                            .expect("functions have PLT entries"),
                    ),
                },
                Some((m, SymbolKind::Data, loc)) => GotSlotState::Bound(Target::Data(DataAddr {
                    module: m,
                    index: loc,
                })),
                None if entry.kind == SymbolKind::Func => GotSlotState::NullSentinel,
                None => GotSlotState::PoisonedData,
            };
            got.push(state);
        }
        let lm = self.modules[id as usize]
            .as_mut()
            .expect("module being bound is resident");
        lm.got = got;
        lm.scope = scope.to_vec();
        Ok(())
    }

    pub fn entry(&self) -> CodeAddr {
        CodeAddr {
            module: 0,
            func: self.entry,
        }
    }

    pub fn executable(&self) -> &LoadedModule {
        self.module(0).expect("the executable is never unloaded")
    }

    pub fn module(&self, id: u32) -> Option<&LoadedModule> {
        self.modules.get(id as usize).and_then(Option::as_ref)
    }

    pub fn module_mut(&mut self, id: u32) -> Option<&mut LoadedModule> {
        self.modules.get_mut(id as usize).and_then(Option::as_mut)
    }

    pub fn policy(&self) -> BindPolicy {
        self.policy
    }

    pub fn search_path(&self) -> &SearchPath {
        &self.search
    }

    /// Startup libraries, in load order.
    pub fn loaded_libs(&self) -> Vec<&str> {
        self.startup[1..]
            .iter()
            .filter_map(|&m| self.module(m))
            .map(LoadedModule::name)
            .collect()
    }

    pub fn absent_libs(&self) -> &[String] {
        &self.absent
    }

    /// GOT of the executable.
    pub fn got(&self) -> &[GotSlotState] {
        &self.executable().got
    }

    pub fn got_state(&self, module: u32, slot: u32) -> Option<GotSlotState> {
        self.module(module)?.got.get(slot as usize).copied()
    }

    /// Overwrite a GOT slot. Lets tests construct states the loader itself
    /// never produces.
    pub fn set_got_state(&mut self, module: u32, slot: u32, state: GotSlotState) {
        if let Some(s) = self
            .module_mut(module)
            .and_then(|m| m.got.get_mut(slot as usize))
        {
            *s = state;
        }
    }

    /// Number of lazy resolutions performed so far.
    pub fn lazy_resolutions(&self) -> u64 {
        self.lazy_resolutions
    }

    /// Resolve the lazy PLT entry `plt` of `module`, binding its GOT slot.
    pub fn lazy_resolve(&mut self, module: u32, plt: u32) -> Result<CodeAddr, TrapCode> {
        let lm = self.module(module).ok_or(TrapCode::StaleHandle)?;
        let entry = lm
            .layout
            .plt
            .get(plt as usize)
            .ok_or(TrapCode::UnresolvedCall)?;
        let slot = entry.got;
        let name = match lm.got.get(slot as usize) {
            Some(GotSlotState::LazyStub(p)) => {
                let p = *p as usize;
                lm.layout
                    .plt
                    .get(p)
                    .ok_or(TrapCode::UnresolvedCall)?
                    .name
                    .clone()
            }
            _ => entry.name.clone(),
        };
        let scope = lm.scope.clone();
        match self.lookup(&scope, &name) {
            Some((m, SymbolKind::Func, loc)) => {
                let addr = CodeAddr {
                    module: m,
                    func: loc,
                };
                self.set_got_state(module, slot, GotSlotState::Bound(Target::Code(addr)));
                self.lazy_resolutions += 1;
                Ok(addr)
            }
            _ => Err(TrapCode::UnresolvedCall),
        }
    }

    /// Name of the module that would satisfy `name` for `module`'s GOT.
    pub fn provider_of(&self, module: u32, name: &str) -> Option<&str> {
        let lm = self.module(module)?;
        let (m, _, _) = self.lookup(&lm.scope, name)?;
        self.module(m).map(LoadedModule::name)
    }

    pub fn inspect(&self) -> GotReport {
        inspect::inspect(self)
    }
}
