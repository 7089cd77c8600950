use super::ast::*;
use super::scope::{NameRef, Scope};
use super::{Diagnostic, LangError};

/// Annotate every `if` with how its condition compiles.
///
/// A bare identifier naming an external function becomes an availability
/// check; one naming an internal function folds to true with a warning; any
/// variable, function references included, and every compound expression is an
/// ordinary test. The annotation carries only the function name, never its
/// signature.
pub fn classify_conditions(mut ast: Ast) -> Result<(Ast, Vec<Diagnostic>), LangError> {
    let mut warnings = Vec::new();
    let mut bodies: Vec<Vec<Stmt>> = ast
        .functions
        .iter_mut()
        .map(|f| std::mem::take(&mut f.body))
        .collect();
    {
        let mut scope = Scope::new(&ast);
        for (fi, body) in bodies.iter_mut().enumerate() {
            scope.enter_function(fi);
            for s in body.iter_mut() {
                visit(s, &mut scope, &mut warnings)?;
            }
        }
    }
    for (f, body) in ast.functions.iter_mut().zip(bodies) {
        f.body = body;
    }
    Ok((ast, warnings))
}

fn visit(
    s: &mut Stmt,
    scope: &mut Scope<'_>,
    warnings: &mut Vec<Diagnostic>,
) -> Result<(), LangError> {
    match s {
        Stmt::Local { name, ty, .. } => {
            scope.declare(name, *ty);
        }
        Stmt::If(i) => {
            i.class = Some(match i.cond.as_ident() {
                None => CondClass::Traditional,
                Some(name) => match scope.resolve(name) {
                    None => {
                        return Err(LangError::UndeclaredIdentifier {
                            name: name.to_owned(),
                            line: i.cond.span.line,
                            col: i.cond.span.col,
                        })
                    }
                    Some(NameRef::ExternFunc(_)) => CondClass::Fac(name.to_owned()),
                    Some(NameRef::Func(_)) | Some(NameRef::Builtin(_)) => {
                        warnings.push(Diagnostic::warning(
                            i.cond.span,
                            format!("`{name}` is an internal function and always available; condition folded to true"),
                        ));
                        CondClass::ConstTrue(name.to_owned())
                    }
                    Some(_) => CondClass::Traditional,
                },
            });
            scope.push_block();
            visit(&mut i.then_branch, scope, warnings)?;
            scope.pop_block();
            if let Some(e) = &mut i.else_branch {
                scope.push_block();
                visit(e, scope, warnings)?;
                scope.pop_block();
            }
        }
        Stmt::Block(b) => {
            scope.push_block();
            for s in b.iter_mut() {
                visit(s, scope, warnings)?;
            }
            scope.pop_block();
        }
        Stmt::Assign { .. } | Stmt::Return { .. } | Stmt::Expr(_) => {}
    }
    Ok(())
}
