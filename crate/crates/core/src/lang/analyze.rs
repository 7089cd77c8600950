//! Name and type checks run between parsing and classification.

use std::collections::HashSet;

use super::ast::*;
use super::scope::{Builtin, NameRef, Scope};
use super::LangError;

fn semantic<T>(span: Span, message: impl Into<String>) -> Result<T, LangError> {
    Err(LangError::Semantic {
        line: span.line,
        col: span.col,
        message: message.into(),
    })
}

fn undeclared<T>(name: &str, span: Span) -> Result<T, LangError> {
    Err(LangError::UndeclaredIdentifier {
        name: name.to_owned(),
        line: span.line,
        col: span.col,
    })
}

/// Reject duplicate names, undeclared identifiers, misuse of function names
/// and type mismatches. Returns the first problem found.
pub fn analyze(ast: &Ast) -> Result<(), LangError> {
    let mut seen = HashSet::new();
    let tops = ast
        .globals
        .iter()
        .map(|g| (g.name.as_str(), g.span))
        .chain(ast.extern_vars.iter().map(|v| (v.name.as_str(), v.span)))
        .chain(ast.extern_funcs.iter().map(|f| (f.name.as_str(), f.span)))
        .chain(ast.functions.iter().map(|f| (f.name.as_str(), f.span)));
    let mut tops: Vec<_> = tops.collect();
    tops.sort_by_key(|(_, span)| *span);
    for (name, span) in tops {
        if Builtin::lookup(name).is_some() {
            return semantic(
                span,
                format!("`{name}` is a builtin and cannot be redeclared"),
            );
        }
        if !seen.insert(name) {
            return Err(LangError::DuplicateName {
                name: name.to_owned(),
                line: span.line,
                col: span.col,
            });
        }
    }

    for g in &ast.globals {
        let lit_ty = match &g.init {
            None => continue,
            Some(Literal::Int(_)) => Type::Int,
            Some(Literal::Str(_)) => Type::Str,
            Some(Literal::Null) => Type::Null,
        };
        if !g.ty.accepts(lit_ty) {
            return semantic(
                g.span,
                format!("cannot initialize {} `{}` with {lit_ty}", g.ty, g.name),
            );
        }
    }

    let mut scope = Scope::new(ast);
    for (fi, f) in ast.functions.iter().enumerate() {
        let mut locals = HashSet::new();
        for p in &f.params {
            if let Some(n) = &p.name {
                if !locals.insert(n.clone()) {
                    return Err(LangError::DuplicateName {
                        name: n.clone(),
                        line: p.span.line,
                        col: p.span.col,
                    });
                }
            }
        }
        scope.enter_function(fi);
        let mut cx = FnCx {
            scope: &mut scope,
            ret: f.ret,
            locals,
        };
        for s in &f.body {
            cx.stmt(s)?;
        }
    }
    Ok(())
}

struct FnCx<'s, 'a> {
    scope: &'s mut Scope<'a>,
    ret: Type,
    locals: HashSet<String>,
}

impl FnCx<'_, '_> {
    fn stmt(&mut self, s: &Stmt) -> Result<(), LangError> {
        match s {
            Stmt::Local {
                name,
                ty,
                init,
                span,
            } => {
                if let Some(e) = init {
                    let t = self.expr(e)?;
                    if !ty.accepts(t) {
                        return semantic(
                            e.span,
                            format!("cannot initialize {ty} `{name}` with {t}"),
                        );
                    }
                }
                if !self.locals.insert(name.clone()) {
                    return Err(LangError::DuplicateName {
                        name: name.clone(),
                        line: span.line,
                        col: span.col,
                    });
                }
                self.scope.declare(name, *ty);
            }
            Stmt::Assign { name, value, span } => {
                let target = match self.scope.resolve(name) {
                    None => return undeclared(name, *span),
                    Some(r) => r,
                };
                let Some(ty) = target.value_type() else {
                    return semantic(*span, format!("cannot assign to function `{name}`"));
                };
                let t = self.expr(value)?;
                if !ty.accepts(t) {
                    return semantic(value.span, format!("cannot assign {t} to {ty} `{name}`"));
                }
            }
            Stmt::If(i) => {
                match i.cond.as_ident() {
                    Some(name) => match self.scope.resolve(name) {
                        None => return undeclared(name, i.cond.span),
                        Some(NameRef::Builtin(_)) => {
                            return semantic(
                                i.cond.span,
                                format!("builtin `{name}` in a condition"),
                            )
                        }
                        Some(NameRef::Func(_)) | Some(NameRef::ExternFunc(_)) => {}
                        Some(_) => {
                            self.expr(&i.cond)?;
                        }
                    },
                    None => {
                        let t = self.expr(&i.cond)?;
                        if !t.is_value() {
                            return semantic(i.cond.span, "condition has no value");
                        }
                    }
                }
                self.nested(&i.then_branch)?;
                if let Some(e) = &i.else_branch {
                    self.nested(e)?;
                }
            }
            Stmt::Block(b) => {
                self.scope.push_block();
                for s in b {
                    self.stmt(s)?;
                }
                self.scope.pop_block();
            }
            Stmt::Return { value, span } => match (value, self.ret) {
                (None, Type::Void) => {}
                (None, r) => return semantic(*span, format!("missing return value of type {r}")),
                (Some(e), Type::Void) => return semantic(e.span, "void function returns a value"),
                (Some(e), r) => {
                    let t = self.expr(e)?;
                    if !r.accepts(t) {
                        return semantic(
                            e.span,
                            format!("returning {t} from a function returning {r}"),
                        );
                    }
                }
            },
            Stmt::Expr(e) => {
                self.expr(e)?;
            }
        }
        Ok(())
    }

    /// A branch body that is not a block still gets its own scope.
    fn nested(&mut self, s: &Stmt) -> Result<(), LangError> {
        self.scope.push_block();
        let r = self.stmt(s);
        self.scope.pop_block();
        r
    }

    fn value(&mut self, e: &Expr) -> Result<Type, LangError> {
        let t = self.expr(e)?;
        if !t.is_value() {
            return semantic(e.span, "void value used in an expression");
        }
        Ok(t)
    }

    fn expr(&mut self, e: &Expr) -> Result<Type, LangError> {
        match &e.kind {
            ExprKind::Int(_) => Ok(Type::Int),
            ExprKind::Str(_) => Ok(Type::Str),
            ExprKind::Null => Ok(Type::Null),
            ExprKind::Ident(name) => match self.scope.resolve(name) {
                None => undeclared(name, e.span),
                Some(NameRef::ExternFunc(_)) => semantic(
                    e.span,
                    format!("external function `{name}` may only be named as an `if` condition or called"),
                ),
                Some(NameRef::Func(_)) | Some(NameRef::Builtin(_)) => {
                    semantic(e.span, format!("function `{name}` used as a value"))
                }
                Some(r) => Ok(r.value_type().expect("variable")),
            },
            ExprKind::Neg(inner) => {
                let t = self.value(inner)?;
                if t != Type::Int {
                    return semantic(inner.span, format!("cannot negate {t}"));
                }
                Ok(Type::Int)
            }
            ExprKind::Binary(op, l, r) => {
                let lt = self.value(l)?;
                let rt = self.value(r)?;
                match op {
                    BinOp::Add | BinOp::Sub => {
                        if lt != Type::Int || rt != Type::Int {
                            return semantic(e.span, format!("operands of `{op}` must be int, found {lt} and {rt}"));
                        }
                    }
                    BinOp::Eq | BinOp::Ne => {
                        if !(lt.accepts(rt) || rt.accepts(lt)) {
                            return semantic(e.span, format!("cannot compare {lt} with {rt}"));
                        }
                    }
                }
                Ok(Type::Int)
            }
            ExprKind::Call(name, args) => {
                let ast = self.scope.ast();
                let (params, ret): (Vec<Type>, Type) = match self.scope.resolve(name) {
                    None => return undeclared(name, e.span),
                    Some(NameRef::Func(i)) => {
                        let f = &ast.functions[i];
                        (f.params.iter().map(|p| p.ty).collect(), f.ret)
                    }
                    Some(NameRef::ExternFunc(i)) => {
                        let f = &ast.extern_funcs[i];
                        (f.params.iter().map(|p| p.ty).collect(), f.ret)
                    }
                    Some(NameRef::Builtin(b)) => return self.builtin(b, name, args, e.span),
                    Some(_) => return semantic(e.span, format!("`{name}` is not a function")),
                };
                if params.len() != args.len() {
                    return semantic(
                        e.span,
                        format!("`{name}` takes {} argument(s), {} given", params.len(), args.len()),
                    );
                }
                for (p, a) in params.iter().zip(args) {
                    let t = self.value(a)?;
                    if !p.accepts(t) {
                        return semantic(a.span, format!("argument of type {t} where {p} is expected"));
                    }
                }
                Ok(ret)
            }
        }
    }

    fn builtin(
        &mut self,
        b: Builtin,
        name: &str,
        args: &[Expr],
        span: Span,
    ) -> Result<Type, LangError> {
        if args.len() != b.arity() {
            return semantic(
                span,
                format!(
                    "`{name}` takes {} argument(s), {} given",
                    b.arity(),
                    args.len()
                ),
            );
        }
        let mut types = Vec::new();
        for a in args {
            types.push(self.value(a)?);
        }
        let expected: &[Option<Type>] = match b {
            Builtin::PrintInt => &[Some(Type::Int)],
            Builtin::PrintStr => &[Some(Type::Str)],
            Builtin::DynOpen => &[Some(Type::Str)],
            Builtin::DynSym => &[Some(Type::Handle), Some(Type::Str)],
            Builtin::DynCall0 => &[Some(Type::FnRef)],
            Builtin::DynCall1 => &[Some(Type::FnRef), None],
            Builtin::DynClose => &[Some(Type::Handle)],
        };
        for ((want, got), a) in expected.iter().zip(&types).zip(args) {
            if let Some(want) = want {
                if !want.accepts(*got) {
                    return semantic(a.span, format!("`{name}` expects {want}, found {got}"));
                }
            } else if *got == Type::Null {
                return semantic(a.span, format!("`{name}` argument cannot be null"));
            }
        }
        Ok(b.ret())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    fn check(src: &str) -> Result<(), LangError> {
        analyze(&parse(&SourceUnit::new("t.mc", src)).unwrap())
    }

    #[test]
    fn accepts_well_formed_programs() {
        check(
            "extern void foo(); extern int ver; int g; str s = \"a\";
             int add(int a, int b) { return a + b; }
             int main() { int x = add(1, 2); if (foo) foo(); if (x == 3) print_int(ver); return 0; }",
        )
        .unwrap();
        check(
            "handle h; fnref f;
             void c() { h = dyn_open(\"libfoo\"); if (h) { f = dyn_sym(h, \"foo\"); if (f) dyn_call0(f); } dyn_close(h); }",
        )
        .unwrap();
    }

    #[test]
    fn duplicates_and_undeclared() {
        assert!(matches!(
            check("int a; int a;"),
            Err(LangError::DuplicateName { .. })
        ));
        assert!(matches!(
            check("extern void f(); void f() {}"),
            Err(LangError::DuplicateName { .. })
        ));
        assert!(matches!(
            check("void f(int a) { int a; }"),
            Err(LangError::DuplicateName { .. })
        ));
        assert!(matches!(
            check("void f() { { int a; } int a; }"),
            Err(LangError::DuplicateName { .. })
        ));
        assert!(matches!(
            check("void f() { x = 1; }"),
            Err(LangError::UndeclaredIdentifier { .. })
        ));
        assert!(matches!(
            check("void f() { if (x) {} }"),
            Err(LangError::UndeclaredIdentifier { .. })
        ));
        assert!(matches!(
            check("void print_int() {}"),
            Err(LangError::Semantic { .. })
        ));
    }

    #[test]
    fn block_scoping() {
        assert!(matches!(
            check("void f() { { int a; } a = 1; }"),
            Err(LangError::UndeclaredIdentifier { .. })
        ));
        check("int a; void f() { int b = a; }").unwrap();
    }

    #[test]
    fn external_function_in_value_position_is_rejected() {
        let e = check("extern void foo(); int f() { int x = foo; return x; }").unwrap_err();
        assert!(matches!(e, LangError::Semantic { .. }));
        // Complex conditions mentioning an external function are not checks.
        assert!(check("extern int foo(); int x; void f() { if (foo == x) {} }").is_err());
        assert!(check("extern int foo(); void f() { if (foo() == 1) {} }").is_ok());
    }

    #[test]
    fn type_errors() {
        assert!(check("void f() { int x = \"s\"; }").is_err());
        assert!(check("void f() { print_str(1); }").is_err());
        assert!(check("int f() { return; }").is_err());
        assert!(check("void f() { return 1; }").is_err());
        assert!(check("void g() {} void f() { int x = g(); }").is_err());
        assert!(check("int g(int a) { return a; } void f() { g(); }").is_err());
        assert!(check("void f() { fnref r = null; handle h = null; }").is_ok());
        assert!(check("void f() { int x = null; }").is_err());
        assert!(check("void f() { f = 1; }").is_err());
    }
}
