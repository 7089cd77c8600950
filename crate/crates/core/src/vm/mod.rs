//! Bytecode interpreter over a loaded [`ProcessImage`].

pub mod value;

use std::fmt;

use crate::isa::{Instruction, NullKind, TrapCode};
use crate::loader::{GotSlotState, LoadError, ProcessImage, Target};

pub use value::{CodeAddr, DataAddr, RuntimeValue};

/// Where a trap was raised.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrapSite {
    pub module: String,
    pub function: String,
    pub instr: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trap {
    pub code: TrapCode,
    pub site: Option<TrapSite>,
    pub detail: String,
}

impl fmt::Display for Trap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "trap {}", self.code.name())?;
        if let Some(s) = &self.site {
            write!(f, " in {}:{}@{}", s.module, s.function, s.instr)?;
        }
        if !self.detail.is_empty() {
            write!(f, ": {}", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExitReport {
    pub exit_code: i32,
    pub stdout: String,
    pub trap: Option<Trap>,
}

/// Limits and hooks for one execution.
pub struct VmConfig<'h> {
    pub max_stack: usize,
    pub max_depth: usize,
    /// Called once, right before the first instruction of `main`.
    pub on_main_entry: Option<Box<dyn FnMut() + 'h>>,
}

impl Default for VmConfig<'_> {
    fn default() -> Self {
        VmConfig {
            max_stack: 1 << 16,
            max_depth: 1 << 10,
            on_main_entry: None,
        }
    }
}

/// Run `main` with default limits.
pub fn run(p: &mut ProcessImage, args: &[i64]) -> ExitReport {
    run_with(p, args, VmConfig::default())
}

pub fn run_with(p: &mut ProcessImage, args: &[i64], mut cfg: VmConfig<'_>) -> ExitReport {
    let mut vm = Vm {
        p,
        stack: Vec::new(),
        frames: Vec::new(),
        out: String::new(),
        max_stack: cfg.max_stack,
        max_depth: cfg.max_depth,
    };
    let result = vm
        .start(args, cfg.on_main_entry.as_mut())
        .and_then(|()| vm.exec());
    let stdout = std::mem::take(&mut vm.out);
    match result {
        Ok(code) => ExitReport {
            exit_code: code,
            stdout,
            trap: None,
        },
        Err((code, detail)) => {
            let site = vm.site();
            ExitReport {
                exit_code: code.exit_code(),
                stdout,
                trap: Some(Trap { code, site, detail }),
            }
        }
    }
}

#[derive(Debug)]
struct Frame {
    addr: CodeAddr,
    pc: u32,
    locals: Vec<RuntimeValue>,
    /// Operand stack height on entry.
    base: usize,
}

type Fault = (TrapCode, String);

fn fault<T>(code: TrapCode, detail: impl Into<String>) -> Result<T, Fault> {
    Err((code, detail.into()))
}

struct Vm<'p> {
    p: &'p mut ProcessImage,
    stack: Vec<RuntimeValue>,
    frames: Vec<Frame>,
    out: String,
    max_stack: usize,
    max_depth: usize,
}

impl Vm<'_> {
    fn site(&self) -> Option<TrapSite> {
        let f = self.frames.last()?;
        let lm = self.p.module(f.addr.module)?;
        let func = lm.module.functions.get(f.addr.func as usize)?;
        Some(TrapSite {
            module: lm.name().to_owned(),
            function: lm.module.str(func.name).to_owned(),
            instr: f.pc.saturating_sub(1),
        })
    }

    fn start(
        &mut self,
        args: &[i64],
        probe: Option<&mut Box<dyn FnMut() + '_>>,
    ) -> Result<(), Fault> {
        let entry = self.p.entry();
        for &a in args {
            self.push(RuntimeValue::Int(a))?;
        }
        self.enter(entry, args.len() as u32)?;
        if let Some(probe) = probe {
            probe();
        }
        Ok(())
    }

    fn push(&mut self, v: RuntimeValue) -> Result<(), Fault> {
        if self.stack.len() >= self.max_stack {
            return fault(TrapCode::StackFault, "operand stack overflow");
        }
        self.stack.push(v);
        Ok(())
    }

    fn pop(&mut self) -> Result<RuntimeValue, Fault> {
        let base = self.frames.last().map_or(0, |f| f.base);
        if self.stack.len() <= base {
            return fault(TrapCode::StackFault, "operand stack underflow");
        }
        Ok(self.stack.pop().expect("checked above"))
    }

    fn pop_int(&mut self) -> Result<i64, Fault> {
        match self.pop()? {
            RuntimeValue::Int(k) => Ok(k),
            v => fault(
                TrapCode::StackFault,
                format!("expected int, found {}", v.type_name()),
            ),
        }
    }

    fn pop_str(&mut self) -> Result<String, Fault> {
        match self.pop()? {
            RuntimeValue::Str(s) => Ok(s),
            v => fault(
                TrapCode::StackFault,
                format!("expected str, found {}", v.type_name()),
            ),
        }
    }

    fn pop_handle(&mut self) -> Result<Option<u32>, Fault> {
        match self.pop()? {
            RuntimeValue::Handle(h) => Ok(h),
            v => fault(
                TrapCode::StackFault,
                format!("expected handle, found {}", v.type_name()),
            ),
        }
    }

    /// Call `addr` with the top `argc` operands as arguments.
    fn enter(&mut self, addr: CodeAddr, argc: u32) -> Result<(), Fault> {
        let Some(lm) = self.p.module(addr.module) else {
            return fault(TrapCode::StaleHandle, "call into an unloaded library");
        };
        let Some(f) = lm.module.functions.get(addr.func as usize) else {
            return fault(TrapCode::UnresolvedCall, "no such function");
        };
        if f.nparams != argc {
            return fault(
                TrapCode::StackFault,
                format!(
                    "`{}` takes {} arguments, called with {argc}",
                    lm.module.str(f.name),
                    f.nparams
                ),
            );
        }
        if self.frames.len() >= self.max_depth {
            return fault(TrapCode::StackFault, "call depth exceeded");
        }
        let nlocals = f.nlocals.max(f.nparams) as usize;
        let base = self.frames.last().map_or(0, |f| f.base);
        if self.stack.len() < base + argc as usize {
            return fault(TrapCode::StackFault, "operand stack underflow");
        }
        let mut locals: Vec<RuntimeValue> = self.stack.split_off(self.stack.len() - argc as usize);
        locals.resize(nlocals, RuntimeValue::Unit);
        self.frames.push(Frame {
            addr,
            pc: 0,
            locals,
            base: self.stack.len(),
        });
        Ok(())
    }

    fn resident(&self, module: u32) -> &crate::loader::LoadedModule {
        self.p.module(module).expect("current module is resident")
    }

    fn got(&self, module: u32, slot: u32) -> GotSlotState {
        self.p
            .got_state(module, slot)
            .unwrap_or(GotSlotState::NullSentinel)
    }

    fn data_slot(&mut self, module: u32, slot: u32) -> Result<&mut RuntimeValue, Fault> {
        let addr = match self.got(module, slot) {
            GotSlotState::Bound(Target::Data(a)) => a,
            _ => {
                return fault(
                    TrapCode::PoisonedDataAccess,
                    "access to a variable of an absent library",
                )
            }
        };
        match self
            .p
            .module_mut(addr.module)
            .and_then(|m| m.data.get_mut(addr.index as usize))
        {
            Some(v) => Ok(v),
            None => fault(TrapCode::PoisonedDataAccess, "variable is not resident"),
        }
    }

    fn exec(&mut self) -> Result<i32, Fault> {
        loop {
            let frame = self.frames.last_mut().expect("exec runs with a frame");
            let CodeAddr { module, func } = frame.addr;
            let pc = frame.pc;
            frame.pc += 1;
            let Some(lm) = self.p.module(module) else {
                return fault(TrapCode::StaleHandle, "executing an unloaded library");
            };
            let Some(&ins) = lm.module.functions[func as usize].code.get(pc as usize) else {
                // Running off the end behaves like returning unit.
                if let Some(code) = self.ret(RuntimeValue::Unit)? {
                    return Ok(code);
                }
                continue;
            };
            match ins {
                Instruction::Halt => return Ok(0),
                Instruction::LoadI(k) => self.push(RuntimeValue::Int(k))?,
                Instruction::LoadS(s) => {
                    let s = self.resident(module).module.str(s).to_owned();
                    self.push(RuntimeValue::Str(s))?
                }
                Instruction::LoadN(kind) => self.push(match kind {
                    NullKind::Handle => RuntimeValue::Handle(None),
                    NullKind::FuncRef => RuntimeValue::FuncRef(None),
                    NullKind::Unit => RuntimeValue::Unit,
                })?,
                Instruction::LoadL(i) => {
                    let v = self.frames.last().expect("frame").locals[i as usize].clone();
                    self.push(v)?
                }
                Instruction::StoreL(i) => {
                    let v = self.pop()?;
                    self.frames.last_mut().expect("frame").locals[i as usize] = v;
                }
                Instruction::LoadD(i) => {
                    let v = self.resident(module).data[i as usize].clone();
                    self.push(v)?
                }
                Instruction::StoreD(i) => {
                    let v = self.pop()?;
                    self.p.module_mut(module).expect("resident").data[i as usize] = v;
                }
                Instruction::LoadG(slot) => {
                    let v = self.data_slot(module, slot)?.clone();
                    self.push(v)?
                }
                Instruction::StoreG(slot) => {
                    let v = self.pop()?;
                    *self.data_slot(module, slot)? = v;
                }
                Instruction::Add | Instruction::Sub => {
                    let b = self.pop_int()?;
                    let a = self.pop_int()?;
                    let r = if ins == Instruction::Add {
                        a.wrapping_add(b)
                    } else {
                        a.wrapping_sub(b)
                    };
                    self.push(RuntimeValue::Int(r))?
                }
                Instruction::Eq | Instruction::Ne => {
                    let b = self.pop()?;
                    let a = self.pop()?;
                    let same = (a == b) == (ins == Instruction::Eq);
                    self.push(RuntimeValue::Int(same as i64))?
                }
                Instruction::Pop => {
                    self.pop()?;
                }
                Instruction::Jz(t) => {
                    if !self.pop()?.truthy() {
                        self.frames.last_mut().expect("frame").pc = t;
                    }
                }
                Instruction::Jmp(t) => self.frames.last_mut().expect("frame").pc = t,
                Instruction::FacJz { got, target } => {
                    if self.got(module, got).is_null() {
                        self.frames.last_mut().expect("frame").pc = target;
                    }
                }
                Instruction::CallI { func, argc } => self.enter(CodeAddr { module, func }, argc)?,
                Instruction::CallX { plt, argc } => {
                    let Some(entry) = self.resident(module).layout.plt.get(plt as usize) else {
                        return fault(TrapCode::UnresolvedCall, "PLT index out of range");
                    };
                    let (name, slot) = (entry.name.clone(), entry.got);
                    let addr = match self.got(module, slot) {
                        GotSlotState::Bound(Target::Code(a)) => a,
                        GotSlotState::LazyStub(_) => self
                            .p
                            .lazy_resolve(module, plt)
                            .map_err(|c| (c, format!("cannot resolve `{name}`")))?,
                        _ => {
                            return fault(
                                TrapCode::UnresolvedCall,
                                format!("call to unavailable `{name}`"),
                            )
                        }
                    };
                    self.enter(addr, argc)?
                }
                Instruction::CallD { argc } => {
                    let base = self.frames.last().expect("frame").base;
                    let at = self
                        .stack
                        .len()
                        .checked_sub(argc as usize + 1)
                        .filter(|&i| i >= base);
                    let Some(at) = at else {
                        return fault(TrapCode::StackFault, "operand stack underflow");
                    };
                    match self.stack.remove(at) {
                        RuntimeValue::FuncRef(Some(a)) => self.enter(a, argc)?,
                        RuntimeValue::FuncRef(None) => {
                            return fault(
                                TrapCode::UnresolvedCall,
                                "call through a null function reference",
                            )
                        }
                        v => {
                            return fault(
                                TrapCode::StackFault,
                                format!("expected fnref, found {}", v.type_name()),
                            )
                        }
                    }
                }
                Instruction::Ret => {
                    let v = self.pop()?;
                    if let Some(code) = self.ret(v)? {
                        return Ok(code);
                    }
                }
                Instruction::PrintInt => {
                    let k = self.pop_int()?;
                    self.out.push_str(&k.to_string());
                    self.push(RuntimeValue::Unit)?
                }
                Instruction::PrintStr => {
                    let s = self.pop_str()?;
                    self.out.push_str(&s);
                    self.push(RuntimeValue::Unit)?
                }
                Instruction::DynOpen => {
                    let name = self.pop_str()?;
                    let h = self.p.dl_open(&name).map_err(|e| {
                        let code = match e {
                            LoadError::KindMismatch { .. } => TrapCode::UnresolvedCall,
                            _ => TrapCode::FormatError,
                        };
                        (code, e.to_string())
                    })?;
                    self.push(RuntimeValue::Handle(h))?
                }
                Instruction::DynSym => {
                    let name = self.pop_str()?;
                    let f = match self.pop_handle()? {
                        None => None,
                        Some(h) => self
                            .p
                            .dl_sym(h, &name)
                            .map_err(|c| (c, format!("dyn_sym on closed handle {h}")))?,
                    };
                    self.push(RuntimeValue::FuncRef(f))?
                }
                Instruction::DynClose => {
                    if let Some(h) = self.pop_handle()? {
                        self.p
                            .dl_close(h)
                            .map_err(|c| (c, format!("handle {h} is already closed")))?;
                    }
                    self.push(RuntimeValue::Unit)?
                }
                Instruction::Trap(code) => return fault(code, "explicit trap"),
                Instruction::SetGot => {}
            }
        }
    }

    /// Pop the current frame. `Some(exit code)` when `main` returned.
    fn ret(&mut self, v: RuntimeValue) -> Result<Option<i32>, Fault> {
        let f = self.frames.pop().expect("frame");
        self.stack.truncate(f.base);
        if self.frames.is_empty() {
            return Ok(Some(match v {
                RuntimeValue::Int(k) => k as i32,
                _ => 0,
            }));
        }
        self.push(v)?;
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::LinkMode;
    use crate::loader::{load, BindPolicy, SearchPath};
    use crate::object::{encode_module, ExecutableImage};
    use crate::pipeline::{build_executable, build_library};

    fn run_src(
        src: &str,
        needed: &[&str],
        libs: &[(&str, &str)],
        policy: BindPolicy,
    ) -> (ExitReport, ProcessImage) {
        let dir = tempfile::tempdir().unwrap();
        for (name, lsrc) in libs {
            let l = build_library(name, lsrc, &[]).unwrap();
            std::fs::write(
                dir.path().join(format!("{name}.facl")),
                encode_module(&l).unwrap(),
            )
            .unwrap();
        }
        let exe = build_executable("t", src, needed, LinkMode::Tolerant).unwrap();
        let mut p = load(
            ExecutableImage::new(exe).unwrap(),
            &SearchPath::new([dir.path()]),
            policy,
        )
        .unwrap();
        let r = run(&mut p, &[]);
        (r, p)
    }

    #[test]
    fn arithmetic_and_exit_code() {
        let (r, _) = run_src(
            "int main() { print_int(2 + 3 - -1); return 7; }",
            &[],
            &[],
            BindPolicy::Eager,
        );
        assert_eq!(
            r,
            ExitReport {
                exit_code: 7,
                stdout: "6".into(),
                trap: None
            }
        );
    }

    #[test]
    fn fac_skips_absent_and_calls_present() {
        let src = "extern void f(); extern void g();
            int main() { if (f) f(); else print_str(\"no f;\"); if (g) g(); else print_str(\"no g;\"); return 0; }";
        let (r, _) = run_src(
            src,
            &["libf", "libg"],
            &[("libf", "void f() { print_str(\"f;\"); }")],
            BindPolicy::Eager,
        );
        assert_eq!(r.stdout, "f;no g;");
        assert_eq!(r.exit_code, 0);
    }

    #[test]
    fn unguarded_absent_call_traps() {
        let (r, _) = run_src(
            "extern void f(); int main() { f(); return 0; }",
            &["libf"],
            &[],
            BindPolicy::Lazy,
        );
        assert_eq!(r.exit_code, 10);
        let t = r.trap.unwrap();
        assert_eq!(t.code, TrapCode::UnresolvedCall);
        assert_eq!(t.site.unwrap().function, "main");
    }

    #[test]
    fn absent_variable_read_traps() {
        let (r, _) = run_src(
            "extern int v; int main() { return v; }",
            &["libv"],
            &[],
            BindPolicy::Eager,
        );
        assert_eq!(r.exit_code, 11);
        let (r, _) = run_src(
            "extern int v; int main() { v = 1; return 0; }",
            &["libv"],
            &[],
            BindPolicy::Eager,
        );
        assert_eq!(r.exit_code, 11);
        let (r, _) = run_src(
            "extern int v; int main() { v = v + 1; return v; }",
            &["libv"],
            &[("libv", "int v = 4;")],
            BindPolicy::Eager,
        );
        assert_eq!(r.exit_code, 5);
    }

    #[test]
    fn lazy_fac_is_true_before_first_call() {
        let src = "extern int f(int x); int main() { if (f) return f(1) + f(2); return 99; }";
        let (r, p) = run_src(
            src,
            &["libf"],
            &[("libf", "int f(int x) { return x + 10; }")],
            BindPolicy::Lazy,
        );
        assert_eq!(r.exit_code, 23);
        assert_eq!(p.lazy_resolutions(), 1);
    }

    #[test]
    fn stub_body_traps() {
        let src = "extern void f(); int main() { f(); return 0; }";
        let dir = tempfile::tempdir().unwrap();
        let stub = crate::link::gen_stub(&crate::link::StubSpec {
            lib_name: "libf".into(),
            functions: vec![("f".into(), 0)],
            variables: vec![],
        })
        .unwrap();
        std::fs::write(dir.path().join("libf.facl"), encode_module(&stub).unwrap()).unwrap();
        let exe = build_executable("t", src, &["libf"], LinkMode::Tolerant).unwrap();
        let mut p = load(
            ExecutableImage::new(exe).unwrap(),
            &SearchPath::new([dir.path()]),
            BindPolicy::Eager,
        )
        .unwrap();
        assert_eq!(run(&mut p, &[]).exit_code, 12);
    }

    #[test]
    fn dyn_api_round_trip_and_stale_handles() {
        let lib = [("libfoo", "int foo() { return 5; }")];
        let ok = "int main() { handle h = dyn_open(\"libfoo\"); fnref f = dyn_sym(h, \"foo\"); int r = dyn_call0(f); dyn_close(h); return r; }";
        let (r, p) = run_src(ok, &[], &lib, BindPolicy::Eager);
        assert_eq!(r.exit_code, 5);
        assert_eq!(p.dl_load_count("libfoo"), 1);
        let stale = "int main() { handle h = dyn_open(\"libfoo\"); fnref f = dyn_sym(h, \"foo\"); dyn_close(h); return dyn_call0(f); }";
        assert_eq!(run_src(stale, &[], &lib, BindPolicy::Eager).0.exit_code, 13);
        let double =
            "int main() { handle h = dyn_open(\"libfoo\"); dyn_close(h); dyn_close(h); return 0; }";
        assert_eq!(
            run_src(double, &[], &lib, BindPolicy::Eager).0.exit_code,
            13
        );
        let missing = "int main() { handle h = dyn_open(\"nolib\"); if (h) return 1; fnref f = dyn_sym(h, \"foo\"); if (f) return 2; return 0; }";
        assert_eq!(
            run_src(missing, &[], &lib, BindPolicy::Eager).0.exit_code,
            0
        );
        let null_call = "int main() { handle h = dyn_open(\"libfoo\"); fnref f = dyn_sym(h, \"nope\"); return dyn_call0(f); }";
        assert_eq!(
            run_src(null_call, &[], &lib, BindPolicy::Eager).0.exit_code,
            10
        );
        let arity = "int main() { handle h = dyn_open(\"libfoo\"); fnref f = dyn_sym(h, \"foo\"); return dyn_call1(f, 3); }";
        assert_eq!(run_src(arity, &[], &lib, BindPolicy::Eager).0.exit_code, 14);
    }

    #[test]
    fn dyn_open_never_satisfies_fac() {
        let src = "extern int foo(); int main() { handle h = dyn_open(\"libfoo\"); if (foo) return 1; return 0; }";
        let (r, p) = run_src(
            src,
            &[],
            &[("libfoo", "int foo() { return 5; }")],
            BindPolicy::Eager,
        );
        assert_eq!(r.exit_code, 0);
        assert!(p.got()[0].is_null());
    }

    #[test]
    fn null_fnref_variable_leaves_got_alone() {
        let src =
            "extern int foo(); fnref r; int main() { r = null; if (foo) return foo(); return 9; }";
        let (r, p) = run_src(
            src,
            &["libfoo"],
            &[("libfoo", "int foo() { return 5; }")],
            BindPolicy::Eager,
        );
        assert_eq!(r.exit_code, 5);
        assert!(matches!(p.got()[0], GotSlotState::Bound(_)));
    }

    #[test]
    fn runaway_recursion_is_a_stack_fault() {
        let (r, _) = run_src(
            "int f(int x) { return f(x + 1); } int main() { return f(0); }",
            &[],
            &[],
            BindPolicy::Eager,
        );
        assert_eq!(r.exit_code, 14);
    }

    #[test]
    fn entry_arguments_must_match() {
        let exe = build_executable(
            "t",
            "int main(int a, int b) { return a - b; }",
            &[],
            LinkMode::Strict,
        )
        .unwrap();
        let mut p = load(
            ExecutableImage::new(exe).unwrap(),
            &SearchPath::default(),
            BindPolicy::Eager,
        )
        .unwrap();
        assert_eq!(run(&mut p, &[10, 3]).exit_code, 7);
        assert_eq!(run(&mut p, &[1]).exit_code, 14);
    }

    #[test]
    fn probe_fires_once_at_main() {
        let exe = build_executable("t", "int main() { return 0; }", &[], LinkMode::Strict).unwrap();
        let mut p = load(
            ExecutableImage::new(exe).unwrap(),
            &SearchPath::default(),
            BindPolicy::Eager,
        )
        .unwrap();
        let mut hits = 0;
        let cfg = VmConfig {
            on_main_entry: Some(Box::new(|| hits += 1)),
            ..Default::default()
        };
        run_with(&mut p, &[], cfg);
        assert_eq!(hits, 1);
    }
}
