//! Lowering of classified ASTs to relocatable FACM modules.
//!
//! External calls go through PLT slots (`CALLX`), external data through GOT
//! slots (`LOADG`/`STOREG`), and an availability check on an external function
//! becomes a single `FACJZ` over the guarded region. Slot operands are left
//! unassigned and carry a relocation; the link editor fills them in.

use std::collections::HashMap;

use thiserror::Error;

use crate::isa::{Instruction, NullKind};
use crate::lang::scope::{Builtin, NameRef, Scope};
use crate::lang::{Ast, BinOp, CondClass, Expr, ExprKind, IfStmt, Literal, Span, Stmt, Type};
use crate::object::{
    Binding, DataInit, Function, ModuleKind, ObjectModule, RelocKind, RelocSite, Relocation,
    SymbolEntry, SymbolKind, UNASSIGNED,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CodegenMode {
    /// Availability checks lowered natively on any external function.
    #[default]
    FacNative,
    /// Emulates weak references plus position-independent code: checked
    /// functions become weak undefined symbols and every function pays a
    /// table-setup instruction.
    WeakAlias,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodegenOptions {
    pub mode: CodegenMode,
    /// Fold conditions on internal functions to their `then` branch.
    pub optimize: bool,
}

impl Default for CodegenOptions {
    fn default() -> Self {
        CodegenOptions {
            mode: CodegenMode::FacNative,
            optimize: true,
        }
    }
}

impl CodegenOptions {
    pub fn weak() -> Self {
        CodegenOptions {
            mode: CodegenMode::WeakAlias,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodegenError {
    #[error("{span}: function `{name}` used as a value")]
    BareFunctionValue { name: String, span: Span },
    #[error("{span}: `if` condition was not classified")]
    Unclassified { span: Span },
    #[error("no GOT slot for `{name}`: it is not an external function of this unit")]
    MissingSlot { name: String },
    #[error("{span}: undeclared identifier `{name}`")]
    Undeclared { name: String, span: Span },
    #[error("{span}: `{name}` is not callable")]
    NotCallable { name: String, span: Span },
    #[error("{span}: cannot assign to `{name}`")]
    NotAssignable { name: String, span: Span },
}

/// External symbol name to its index in the module symbol table.
pub type SlotMap = HashMap<String, u32>;

/// Compile a classified AST into a relocatable module called `name`.
pub fn compile_unit(
    ast: &Ast,
    name: &str,
    opts: CodegenOptions,
) -> Result<ObjectModule, CodegenError> {
    let mut unit = UnitGen {
        ast,
        opts,
        module: ObjectModule::new(name, ModuleKind::Relocatable),
        slots: SlotMap::new(),
    };
    unit.define_symbols();
    let mut scope = Scope::new(ast);
    for fi in 0..ast.functions.len() {
        scope.enter_function(fi);
        let func = FnGen {
            unit: &mut unit,
            scope: &mut scope,
            func: fi as u32,
            code: Vec::new(),
        }
        .run()?;
        unit.module.functions.push(func);
    }
    Ok(unit.module)
}

struct UnitGen<'a> {
    ast: &'a Ast,
    opts: CodegenOptions,
    module: ObjectModule,
    slots: SlotMap,
}

impl UnitGen<'_> {
    fn define_symbols(&mut self) {
        let ast = self.ast;
        for (i, f) in ast.functions.iter().enumerate() {
            let name = self.module.strings.intern(&f.name);
            self.module.symbols.push(SymbolEntry {
                name,
                kind: SymbolKind::Func,
                binding: Binding::Defined,
                location: Some(i as u32),
            });
        }
        for (i, g) in ast.globals.iter().enumerate() {
            let init = match &g.init {
                Some(Literal::Int(k)) => DataInit::Int(*k),
                Some(Literal::Str(s)) => DataInit::Str(self.module.strings.intern(s)),
                Some(Literal::Null) if g.ty == Type::FnRef => DataInit::NullFuncRef,
                Some(Literal::Null) => DataInit::NullHandle,
                None => match g.ty {
                    Type::Str => DataInit::Str(self.module.strings.intern("")),
                    Type::Handle => DataInit::NullHandle,
                    Type::FnRef => DataInit::NullFuncRef,
                    _ => DataInit::Int(0),
                },
            };
            self.module.data.push(init);
            let name = self.module.strings.intern(&g.name);
            self.module.symbols.push(SymbolEntry {
                name,
                kind: SymbolKind::Data,
                binding: Binding::Defined,
                location: Some(i as u32),
            });
        }
    }

    /// Symbol index for an external, created on first reference.
    fn extern_symbol(
        &mut self,
        name: &str,
        kind: SymbolKind,
        checked: bool,
    ) -> Result<u32, CodegenError> {
        let declared_weak = match kind {
            SymbolKind::Func => match self.ast.extern_funcs.iter().find(|f| f.name == name) {
                Some(f) => f.weak,
                None => {
                    return Err(CodegenError::MissingSlot {
                        name: name.to_owned(),
                    })
                }
            },
            SymbolKind::Data => {
                if !self.ast.extern_vars.iter().any(|v| v.name == name) {
                    return Err(CodegenError::MissingSlot {
                        name: name.to_owned(),
                    });
                }
                false
            }
        };
        let idx = match self.slots.get(name) {
            Some(&i) => i,
            None => {
                let binding = if declared_weak {
                    Binding::WeakUndefined
                } else {
                    Binding::Undefined
                };
                let name_idx = self.module.strings.intern(name);
                let i = self.module.symbols.len() as u32;
                self.module.symbols.push(SymbolEntry {
                    name: name_idx,
                    kind,
                    binding,
                    location: None,
                });
                self.slots.insert(name.to_owned(), i);
                i
            }
        };
        if checked && self.opts.mode == CodegenMode::WeakAlias {
            self.module.symbols[idx as usize].binding = Binding::WeakUndefined;
        }
        Ok(idx)
    }
}

struct FnGen<'g, 'a, 's> {
    unit: &'g mut UnitGen<'a>,
    scope: &'s mut Scope<'a>,
    func: u32,
    code: Vec<Instruction>,
}

impl<'a> FnGen<'_, 'a, '_> {
    fn run(mut self) -> Result<Function, CodegenError> {
        let ast = self.unit.ast;
        let def = &ast.functions[self.func as usize];
        if self.unit.opts.mode == CodegenMode::WeakAlias {
            self.emit(Instruction::SetGot);
        }
        for s in &def.body {
            self.stmt(s)?;
        }
        // Falling off the end returns the type's default value.
        self.default_value(def.ret);
        self.emit(Instruction::Ret);
        let name = self.unit.module.strings.intern(&def.name);
        Ok(Function {
            name,
            nparams: def.params.len() as u32,
            nlocals: self.scope.local_count(),
            code: self.code,
        })
    }

    fn emit(&mut self, ins: Instruction) -> usize {
        self.code.push(ins);
        self.code.len() - 1
    }

    fn here(&self) -> u32 {
        self.code.len() as u32
    }

    fn patch_target(&mut self, at: usize, target: u32) {
        self.code[at] = match self.code[at] {
            Instruction::Jz(_) => Instruction::Jz(target),
            Instruction::Jmp(_) => Instruction::Jmp(target),
            Instruction::FacJz { got, .. } => Instruction::FacJz { got, target },
            other => unreachable!("not a branch: {other}"),
        };
    }

    fn relocate(&mut self, at: usize, symbol: u32, kind: RelocKind) {
        self.unit.module.relocations.push(Relocation {
            site: RelocSite {
                func: self.func,
                instr: at as u32,
                operand: 0,
            },
            symbol,
            kind,
        });
    }

    fn default_value(&mut self, ty: Type) {
        let ins = match ty {
            Type::Int => Instruction::LoadI(0),
            Type::Str => Instruction::LoadS(self.unit.module.strings.intern("")),
            Type::Handle | Type::Null => Instruction::LoadN(NullKind::Handle),
            Type::FnRef => Instruction::LoadN(NullKind::FuncRef),
            Type::Void => Instruction::LoadN(NullKind::Unit),
        };
        self.emit(ins);
    }

    fn nested(&mut self, s: &Stmt) -> Result<(), CodegenError> {
        self.scope.push_block();
        let r = self.stmt(s);
        self.scope.pop_block();
        r
    }

    fn stmt(&mut self, s: &Stmt) -> Result<(), CodegenError> {
        match s {
            Stmt::Local { name, ty, init, .. } => {
                match init {
                    Some(e) => self.expr(e, Some(*ty))?,
                    None => self.default_value(*ty),
                }
                let slot = self.scope.declare(name, *ty);
                self.emit(Instruction::StoreL(slot));
            }
            Stmt::Assign { name, value, span } => {
                let target = self
                    .scope
                    .resolve(name)
                    .ok_or_else(|| CodegenError::Undeclared {
                        name: name.clone(),
                        span: *span,
                    })?;
                self.expr(value, target.value_type())?;
                match target {
                    NameRef::Local { slot, .. } => {
                        self.emit(Instruction::StoreL(slot));
                    }
                    NameRef::Global { index, .. } => {
                        self.emit(Instruction::StoreD(index as u32));
                    }
                    NameRef::ExternVar { .. } => {
                        let sym = self.unit.extern_symbol(name, SymbolKind::Data, false)?;
                        let at = self.emit(Instruction::StoreG(UNASSIGNED));
                        self.relocate(at, sym, RelocKind::GotSlot);
                    }
                    _ => {
                        return Err(CodegenError::NotAssignable {
                            name: name.clone(),
                            span: *span,
                        })
                    }
                }
            }
            Stmt::If(i) => match &i.class {
                None => return Err(CodegenError::Unclassified { span: i.span }),
                Some(CondClass::Fac(name)) => self.lower_fac_if(i, name)?,
                Some(CondClass::ConstTrue(_)) if self.unit.opts.optimize => {
                    self.nested(&i.then_branch)?;
                }
                Some(CondClass::ConstTrue(_)) => {
                    self.emit(Instruction::LoadI(1));
                    let test = self.emit(Instruction::Jz(UNASSIGNED));
                    self.branches(i, test)?;
                }
                Some(CondClass::Traditional) => {
                    self.expr(&i.cond, None)?;
                    let test = self.emit(Instruction::Jz(UNASSIGNED));
                    self.branches(i, test)?;
                }
            },
            Stmt::Block(b) => {
                self.scope.push_block();
                for s in b {
                    self.stmt(s)?;
                }
                self.scope.pop_block();
            }
            Stmt::Return { value, .. } => {
                let ret = self.unit.ast.functions[self.func as usize].ret;
                match value {
                    Some(e) => self.expr(e, Some(ret))?,
                    None => {
                        self.emit(Instruction::LoadN(NullKind::Unit));
                    }
                }
                self.emit(Instruction::Ret);
            }
            Stmt::Expr(e) => {
                self.expr(e, None)?;
                self.emit(Instruction::Pop);
            }
        }
        Ok(())
    }

    /// `FACJZ slot, after-then` guarding the `then` branch; the `else` branch,
    /// if any, is where the jump lands.
    fn lower_fac_if(&mut self, node: &IfStmt, target: &str) -> Result<(), CodegenError> {
        let sym = self.unit.extern_symbol(target, SymbolKind::Func, true)?;
        let test = self.emit(Instruction::FacJz {
            got: UNASSIGNED,
            target: UNASSIGNED,
        });
        self.relocate(test, sym, RelocKind::GotSlot);
        self.branches(node, test)
    }

    /// Emits then/else after a conditional jump at `test` that must skip the
    /// `then` branch.
    fn branches(&mut self, node: &IfStmt, test: usize) -> Result<(), CodegenError> {
        self.nested(&node.then_branch)?;
        match &node.else_branch {
            None => {
                let t = self.here();
                self.patch_target(test, t);
            }
            Some(e) => {
                let join = self.emit(Instruction::Jmp(UNASSIGNED));
                let t = self.here();
                self.patch_target(test, t);
                self.nested(e)?;
                let t = self.here();
                self.patch_target(join, t);
            }
        }
        Ok(())
    }

    fn type_of(&self, e: &Expr) -> Type {
        match &e.kind {
            ExprKind::Int(_) | ExprKind::Neg(_) | ExprKind::Binary(..) => Type::Int,
            ExprKind::Str(_) => Type::Str,
            ExprKind::Null => Type::Null,
            ExprKind::Ident(n) => self
                .scope
                .resolve(n)
                .and_then(|r| r.value_type())
                .unwrap_or(Type::Int),
            ExprKind::Call(n, _) => match self.scope.resolve(n) {
                Some(NameRef::Func(i)) => self.unit.ast.functions[i].ret,
                Some(NameRef::ExternFunc(i)) => self.unit.ast.extern_funcs[i].ret,
                Some(NameRef::Builtin(b)) => b.ret(),
                _ => Type::Int,
            },
        }
    }

    fn expr(&mut self, e: &Expr, hint: Option<Type>) -> Result<(), CodegenError> {
        match &e.kind {
            ExprKind::Int(k) => {
                self.emit(Instruction::LoadI(*k));
            }
            ExprKind::Str(s) => {
                let idx = self.unit.module.strings.intern(s);
                self.emit(Instruction::LoadS(idx));
            }
            ExprKind::Null => {
                let kind = if hint == Some(Type::FnRef) {
                    NullKind::FuncRef
                } else {
                    NullKind::Handle
                };
                self.emit(Instruction::LoadN(kind));
            }
            ExprKind::Ident(name) => match self.scope.resolve(name) {
                None => {
                    return Err(CodegenError::Undeclared {
                        name: name.clone(),
                        span: e.span,
                    })
                }
                Some(NameRef::Local { slot, .. }) => {
                    self.emit(Instruction::LoadL(slot));
                }
                Some(NameRef::Global { index, .. }) => {
                    self.emit(Instruction::LoadD(index as u32));
                }
                Some(NameRef::ExternVar { .. }) => {
                    let sym = self.unit.extern_symbol(name, SymbolKind::Data, false)?;
                    let at = self.emit(Instruction::LoadG(UNASSIGNED));
                    self.relocate(at, sym, RelocKind::GotSlot);
                }
                Some(_) => {
                    return Err(CodegenError::BareFunctionValue {
                        name: name.clone(),
                        span: e.span,
                    })
                }
            },
            ExprKind::Neg(inner) => {
                self.emit(Instruction::LoadI(0));
                self.expr(inner, Some(Type::Int))?;
                self.emit(Instruction::Sub);
            }
            ExprKind::Binary(op, l, r) => {
                let (lh, rh) = match op {
                    BinOp::Eq | BinOp::Ne => (Some(self.type_of(r)), Some(self.type_of(l))),
                    _ => (Some(Type::Int), Some(Type::Int)),
                };
                self.expr(l, lh)?;
                self.expr(r, rh)?;
                self.emit(match op {
                    BinOp::Add => Instruction::Add,
                    BinOp::Sub => Instruction::Sub,
                    BinOp::Eq => Instruction::Eq,
                    BinOp::Ne => Instruction::Ne,
                });
            }
            ExprKind::Call(name, args) => self.call(name, args, e.span)?,
        }
        Ok(())
    }

    fn call(&mut self, name: &str, args: &[Expr], span: Span) -> Result<(), CodegenError> {
        let ast = self.unit.ast;
        let argc = args.len() as u32;
        match self.scope.resolve(name) {
            None => Err(CodegenError::Undeclared {
                name: name.to_owned(),
                span,
            }),
            Some(NameRef::Func(i)) => {
                for (a, p) in args.iter().zip(&ast.functions[i].params) {
                    self.expr(a, Some(p.ty))?;
                }
                self.emit(Instruction::CallI {
                    func: i as u32,
                    argc,
                });
                Ok(())
            }
            Some(NameRef::ExternFunc(i)) => {
                for (a, p) in args.iter().zip(&ast.extern_funcs[i].params) {
                    self.expr(a, Some(p.ty))?;
                }
                let sym = self.unit.extern_symbol(name, SymbolKind::Func, false)?;
                let at = self.emit(Instruction::CallX {
                    plt: UNASSIGNED,
                    argc,
                });
                self.relocate(at, sym, RelocKind::PltSlot);
                Ok(())
            }
            Some(NameRef::Builtin(b)) => {
                let hints: &[Type] = match b {
                    Builtin::DynSym => &[Type::Handle, Type::Str],
                    Builtin::DynCall0 | Builtin::DynCall1 => &[Type::FnRef, Type::Int],
                    Builtin::DynClose => &[Type::Handle],
                    _ => &[],
                };
                for (k, a) in args.iter().enumerate() {
                    self.expr(a, hints.get(k).copied())?;
                }
                self.emit(match b {
                    Builtin::PrintInt => Instruction::PrintInt,
                    Builtin::PrintStr => Instruction::PrintStr,
                    Builtin::DynOpen => Instruction::DynOpen,
                    Builtin::DynSym => Instruction::DynSym,
                    Builtin::DynCall0 => Instruction::CallD { argc: 0 },
                    Builtin::DynCall1 => Instruction::CallD { argc: 1 },
                    Builtin::DynClose => Instruction::DynClose,
                });
                Ok(())
            }
            Some(_) => Err(CodegenError::NotCallable {
                name: name.to_owned(),
                span,
            }),
        }
    }
}
