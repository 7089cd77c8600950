#![allow(dead_code)]

pub mod modules;

use std::fmt::Write;
use std::path::Path;

use fac_core::object::encode_module;
use fac_core::pipeline::build_library;
use proptest::prelude::*;

#[derive(Debug, Clone)]
pub struct Ext {
    pub name: String,
    pub arity: usize,
    pub weak: bool,
    /// Index of the defining library.
    pub lib: usize,
}

#[derive(Debug, Clone)]
pub enum S {
    /// `if (e) e(..); else print`
    FacCall(usize),
    /// `if (e) print`
    FacPrint(usize),
    /// `if (internal) internal();`
    Internal(usize),
    /// Integer test on a global.
    Global(i64),
    /// Truthiness of the function-reference variable.
    RefTest,
    RefNull,
    Nested(usize, usize),
    PrintSub(i64),
}

/// A random program over externs spread across up to three libraries. Every
/// extern call sits behind an availability check, so the program runs to
/// completion under any combination of present libraries.
#[derive(Debug, Clone)]
pub struct Program {
    pub nlibs: usize,
    pub externs: Vec<Ext>,
    pub internals: usize,
    pub body: Vec<S>,
}

pub fn program() -> impl Strategy<Value = Program> {
    (
        1usize..=3,
        prop::collection::vec((0usize..4, any::<bool>(), 0usize..3), 1..5),
        0usize..3,
    )
        .prop_flat_map(|(nlibs, ext, internals)| {
            let externs: Vec<Ext> = ext
                .into_iter()
                .enumerate()
                .map(|(i, (arity, weak, lib))| Ext {
                    name: format!("e{i}"),
                    arity,
                    weak,
                    lib: lib % nlibs,
                })
                .collect();
            let ne = externs.len();
            let stmt = prop_oneof![
                (0..ne).prop_map(S::FacCall),
                (0..ne).prop_map(S::FacPrint),
                (0..internals.max(1)).prop_map(move |i| if internals == 0 {
                    S::RefTest
                } else {
                    S::Internal(i)
                }),
                (0i64..4).prop_map(S::Global),
                Just(S::RefTest),
                Just(S::RefNull),
                (0..ne, 0..ne).prop_map(|(a, b)| S::Nested(a, b)),
                (-3i64..3).prop_map(S::PrintSub),
            ];
            (
                Just(nlibs),
                Just(externs),
                Just(internals),
                prop::collection::vec(stmt, 0..12),
            )
        })
        .prop_map(|(nlibs, externs, internals, body)| Program {
            nlibs,
            externs,
            internals,
            body,
        })
}

pub fn lib_name(i: usize) -> String {
    format!("libq{i}")
}

fn args(n: usize) -> String {
    (0..n)
        .map(|k| (k + 1).to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

impl Program {
    pub fn lib_names(&self) -> Vec<String> {
        (0..self.nlibs).map(lib_name).collect()
    }

    pub fn source(&self) -> String {
        let mut s = String::new();
        for e in &self.externs {
            let params = vec!["int"; e.arity].join(", ");
            let w = if e.weak { "weak " } else { "" };
            let _ = writeln!(s, "{w}extern void {}({params});", e.name);
        }
        let _ = writeln!(s, "extern void shared_fn();");
        let _ = writeln!(s, "extern int qv0;");
        let _ = writeln!(s, "fnref r;\nint g = 1;");
        for i in 0..self.internals {
            let _ = writeln!(s, "void i{i}() {{ print_str(\"i{i}\\n\"); }}");
        }
        let _ = writeln!(s, "void never() {{ print_int(qv0); shared_fn(); }}");
        s.push_str("int main()\n{\n");
        for st in &self.body {
            let e = |i: usize| &self.externs[i];
            let line = match st {
                S::FacCall(i) => format!(
                    "if ({0}) {0}({1}); else print_str(\"{0}:absent\\n\");",
                    e(*i).name,
                    args(e(*i).arity)
                ),
                S::FacPrint(i) => format!("if ({0}) print_str(\"{0}:present\\n\");", e(*i).name),
                S::Internal(i) => format!("if (i{i}) i{i}();"),
                S::Global(k) => format!("if (g == {k}) print_int(g); else g = g + 1;"),
                S::RefTest => "if (r) dyn_call0(r); else print_str(\"r:null\\n\");".into(),
                S::RefNull => "r = null;".into(),
                S::Nested(a, b) => format!(
                    "if ({0}) {{ if ({1}) {1}({2}); else print_str(\"{1}:inner\\n\"); }} else print_str(\"{0}:outer\\n\");",
                    e(*a).name,
                    e(*b).name,
                    args(e(*b).arity)
                ),
                S::PrintSub(k) => format!("print_int(g - {k});"),
            };
            let _ = writeln!(s, "    {line}");
        }
        s.push_str("    return 0;\n}\n");
        s
    }

    /// Source of library `lib`: its externs, a copy of `shared_fn` and, for
    /// the first library only, the data symbol `qv0`.
    pub fn lib_source(&self, lib: usize) -> String {
        let mut s = String::new();
        if lib == 0 {
            s.push_str("int qv0 = 7;\n");
        }
        let _ = writeln!(s, "void shared_fn() {{ print_str(\"shared:{lib}\\n\"); }}");
        for e in self.externs.iter().filter(|e| e.lib == lib) {
            let params = (0..e.arity)
                .map(|k| format!("int p{k}"))
                .collect::<Vec<_>>()
                .join(", ");
            let sum = if e.arity == 0 {
                "0".to_string()
            } else {
                (0..e.arity)
                    .map(|k| format!("p{k}"))
                    .collect::<Vec<_>>()
                    .join(" + ")
            };
            let _ = writeln!(
                s,
                "void {0}({params}) {{ print_str(\"{0}:called\\n\"); print_int({sum}); }}",
                e.name
            );
        }
        s
    }

    /// Expected stdout when exactly the libraries in `present` are
    /// available, computed directly from the statement list.
    pub fn expected(&self, present: &[bool]) -> String {
        let avail = |i: usize| present[self.externs[i].lib];
        let called = |i: usize| {
            let e = &self.externs[i];
            let sum: usize = (1..=e.arity).sum();
            format!("{}:called\n{sum}", e.name)
        };
        let mut out = String::new();
        let mut g: i64 = 1;
        for st in &self.body {
            match st {
                S::FacCall(i) => {
                    if avail(*i) {
                        out += &called(*i);
                    } else {
                        out += &format!("{}:absent\n", self.externs[*i].name);
                    }
                }
                S::FacPrint(i) => {
                    if avail(*i) {
                        out += &format!("{}:present\n", self.externs[*i].name);
                    }
                }
                S::Internal(i) => out += &format!("i{i}\n"),
                S::Global(k) => {
                    if g == *k {
                        out += &g.to_string();
                    } else {
                        g += 1;
                    }
                }
                S::RefTest => out += "r:null\n",
                S::RefNull => {}
                S::Nested(a, b) => {
                    if !avail(*a) {
                        out += &format!("{}:outer\n", self.externs[*a].name);
                    } else if avail(*b) {
                        out += &called(*b);
                    } else {
                        out += &format!("{}:inner\n", self.externs[*b].name);
                    }
                }
                S::PrintSub(k) => out += &(g - k).to_string(),
            }
        }
        out
    }

    /// Writes the libraries selected by `present` into `dir`.
    pub fn stage_libs(&self, dir: &Path, present: &[bool]) {
        for (lib, &on) in present.iter().enumerate() {
            if on {
                let name = lib_name(lib);
                let m = build_library(&name, &self.lib_source(lib), &[]).expect("library builds");
                std::fs::write(dir.join(format!("{name}.facl")), encode_module(&m).unwrap())
                    .unwrap();
            }
        }
    }
}

/// All `2^n` presence vectors.
pub fn subsets(n: usize) -> Vec<Vec<bool>> {
    (0..1u32 << n)
        .map(|bits| (0..n).map(|i| bits & (1 << i) != 0).collect())
        .collect()
}
