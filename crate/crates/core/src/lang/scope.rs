//! Name resolution shared by the analyzer, the classifier and the code generator.

use std::collections::HashMap;

use super::ast::{Ast, Type};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    PrintInt,
    PrintStr,
    DynOpen,
    DynSym,
    DynCall0,
    DynCall1,
    DynClose,
}

impl Builtin {
    pub fn lookup(name: &str) -> Option<Builtin> {
        Some(match name {
            "print_int" => Builtin::PrintInt,
            "print_str" => Builtin::PrintStr,
            "dyn_open" => Builtin::DynOpen,
            "dyn_sym" => Builtin::DynSym,
            "dyn_call0" => Builtin::DynCall0,
            "dyn_call1" => Builtin::DynCall1,
            "dyn_close" => Builtin::DynClose,
            _ => return None,
        })
    }

    pub fn arity(self) -> usize {
        match self {
            Builtin::DynSym | Builtin::DynCall1 => 2,
            _ => 1,
        }
    }

    pub fn ret(self) -> Type {
        match self {
            Builtin::PrintInt | Builtin::PrintStr | Builtin::DynClose => Type::Void,
            Builtin::DynOpen => Type::Handle,
            Builtin::DynSym => Type::FnRef,
            Builtin::DynCall0 | Builtin::DynCall1 => Type::Int,
        }
    }
}

/// What a top-level name denotes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopItem {
    /// Index into `Ast::functions`.
    Func(usize),
    ExternFunc(usize),
    ExternVar(usize),
    Global(usize),
}

/// What an identifier denotes at a particular point in a function body.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NameRef {
    /// Local slot (parameters first).
    Local {
        slot: u32,
        ty: Type,
    },
    Global {
        index: usize,
        ty: Type,
    },
    ExternVar {
        index: usize,
        ty: Type,
    },
    Func(usize),
    ExternFunc(usize),
    Builtin(Builtin),
}

impl NameRef {
    pub fn is_variable(&self) -> bool {
        matches!(
            self,
            NameRef::Local { .. } | NameRef::Global { .. } | NameRef::ExternVar { .. }
        )
    }

    pub fn value_type(&self) -> Option<Type> {
        match *self {
            NameRef::Local { ty, .. }
            | NameRef::Global { ty, .. }
            | NameRef::ExternVar { ty, .. } => Some(ty),
            _ => None,
        }
    }
}

/// Top-level table plus a stack of block scopes for the function being walked.
pub struct Scope<'a> {
    ast: &'a Ast,
    top: HashMap<&'a str, TopItem>,
    blocks: Vec<HashMap<String, (u32, Type)>>,
    next_slot: u32,
}

impl<'a> Scope<'a> {
    /// Builds the top-level table. Later duplicates lose; the analyzer reports
    /// them before anyone relies on this.
    pub fn new(ast: &'a Ast) -> Scope<'a> {
        let mut top = HashMap::new();
        for (i, g) in ast.globals.iter().enumerate() {
            top.entry(g.name.as_str()).or_insert(TopItem::Global(i));
        }
        for (i, v) in ast.extern_vars.iter().enumerate() {
            top.entry(v.name.as_str()).or_insert(TopItem::ExternVar(i));
        }
        for (i, f) in ast.extern_funcs.iter().enumerate() {
            top.entry(f.name.as_str()).or_insert(TopItem::ExternFunc(i));
        }
        for (i, f) in ast.functions.iter().enumerate() {
            top.entry(f.name.as_str()).or_insert(TopItem::Func(i));
        }
        Scope {
            ast,
            top,
            blocks: Vec::new(),
            next_slot: 0,
        }
    }

    pub fn ast(&self) -> &'a Ast {
        self.ast
    }

    pub fn top(&self, name: &str) -> Option<TopItem> {
        self.top.get(name).copied()
    }

    /// Start a fresh function: parameters occupy the first slots.
    pub fn enter_function(&mut self, func: usize) {
        self.blocks.clear();
        self.blocks.push(HashMap::new());
        self.next_slot = 0;
        let params = &self.ast.functions[func].params;
        for p in params {
            if let Some(name) = &p.name {
                self.declare(name, p.ty);
            } else {
                self.next_slot += 1;
            }
        }
    }

    pub fn push_block(&mut self) {
        self.blocks.push(HashMap::new());
    }

    pub fn pop_block(&mut self) {
        self.blocks.pop();
    }

    /// Declares a local in the innermost block and returns its slot.
    pub fn declare(&mut self, name: &str, ty: Type) -> u32 {
        let slot = self.next_slot;
        self.next_slot += 1;
        if let Some(b) = self.blocks.last_mut() {
            b.insert(name.to_owned(), (slot, ty));
        }
        slot
    }

    pub fn local_count(&self) -> u32 {
        self.next_slot
    }

    pub fn resolve(&self, name: &str) -> Option<NameRef> {
        for b in self.blocks.iter().rev() {
            if let Some(&(slot, ty)) = b.get(name) {
                return Some(NameRef::Local { slot, ty });
            }
        }
        let ast = self.ast;
        if let Some(item) = self.top(name) {
            return Some(match item {
                TopItem::Func(i) => NameRef::Func(i),
                TopItem::ExternFunc(i) => NameRef::ExternFunc(i),
                TopItem::ExternVar(i) => NameRef::ExternVar {
                    index: i,
                    ty: ast.extern_vars[i].ty,
                },
                TopItem::Global(i) => NameRef::Global {
                    index: i,
                    ty: ast.globals[i].ty,
                },
            });
        }
        Builtin::lookup(name).map(NameRef::Builtin)
    }
}
