use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::LangError;

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, LangError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        let span = self.span();
        Err(LangError::Syntax {
            line: span.line,
            col: span.col,
            message: message.into(),
        })
    }

    fn unexpected<T>(&self, wanted: &str) -> PResult<T> {
        self.error(format!(
            "expected {wanted}, found {}",
            self.peek().describe()
        ))
    }

    fn expect(&mut self, tok: Tok, wanted: &str) -> PResult<Span> {
        if self.peek() == &tok {
            Ok(self.bump().span)
        } else {
            self.unexpected(wanted)
        }
    }

    fn ident(&mut self) -> PResult<(String, Span)> {
        match self.peek().clone() {
            Tok::Ident(n) => {
                let span = self.bump().span;
                Ok((n, span))
            }
            _ => self.unexpected("identifier"),
        }
    }

    fn type_keyword(tok: &Tok) -> Option<Type> {
        Some(match tok {
            Tok::KwInt => Type::Int,
            Tok::KwStr => Type::Str,
            Tok::KwHandle => Type::Handle,
            Tok::KwFnRef => Type::FnRef,
            Tok::KwVoid => Type::Void,
            _ => return None,
        })
    }

    fn ty(&mut self) -> PResult<Type> {
        match Self::type_keyword(self.peek()) {
            Some(t) => {
                self.bump();
                Ok(t)
            }
            None => self.unexpected("type"),
        }
    }

    fn program(&mut self) -> PResult<Ast> {
        let mut ast = Ast::default();
        while self.peek() != &Tok::Eof {
            self.top_decl(&mut ast)?;
        }
        Ok(ast)
    }

    fn top_decl(&mut self, ast: &mut Ast) -> PResult<()> {
        let span = self.span();
        let weak = self.eat(&Tok::Weak);
        if weak && self.peek() != &Tok::Extern {
            return self.unexpected("`extern` after `weak`");
        }
        if self.eat(&Tok::Extern) {
            let ty = self.ty()?;
            let (name, _) = self.ident()?;
            if self.peek() == &Tok::LParen {
                let params = self.params(false)?;
                self.expect(Tok::Semi, "`;`")?;
                ast.extern_funcs.push(ExternFuncDecl {
                    name,
                    ret: ty,
                    params,
                    weak,
                    span,
                });
            } else {
                if weak {
                    return self.error("`weak` applies only to function declarations");
                }
                if ty == Type::Void {
                    return self.error(format!("variable `{name}` declared void"));
                }
                self.expect(Tok::Semi, "`;` or `(`")?;
                ast.extern_vars.push(ExternVarDecl { name, ty, span });
            }
            return Ok(());
        }

        let ty = self.ty()?;
        let (name, _) = self.ident()?;
        if self.peek() == &Tok::LParen {
            let params = self.params(true)?;
            let body = self.block()?;
            ast.functions.push(FuncDef {
                name,
                ret: ty,
                params,
                body,
                span,
            });
        } else {
            if ty == Type::Void {
                return self.error(format!("variable `{name}` declared void"));
            }
            let init = if self.eat(&Tok::Assign) {
                Some(self.literal()?)
            } else {
                None
            };
            self.expect(Tok::Semi, "`;`")?;
            ast.globals.push(GlobalVarDecl {
                name,
                ty,
                init,
                span,
            });
        }
        Ok(())
    }

    fn literal(&mut self) -> PResult<Literal> {
        let neg = self.eat(&Tok::Minus);
        match self.peek().clone() {
            Tok::Int(k) => {
                self.bump();
                Ok(Literal::Int(if neg { k.wrapping_neg() } else { k }))
            }
            Tok::Str(s) if !neg => {
                self.bump();
                Ok(Literal::Str(s))
            }
            Tok::Null if !neg => {
                self.bump();
                Ok(Literal::Null)
            }
            _ => self.unexpected("literal initializer"),
        }
    }

    fn params(&mut self, need_names: bool) -> PResult<Vec<Param>> {
        self.expect(Tok::LParen, "`(`")?;
        let mut params = Vec::new();
        if self.peek() == &Tok::KwVoid && self.peek_at(1) == &Tok::RParen {
            self.bump();
        }
        if self.eat(&Tok::RParen) {
            return Ok(params);
        }
        loop {
            let span = self.span();
            let ty = self.ty()?;
            if ty == Type::Void {
                return Err(LangError::Syntax {
                    line: span.line,
                    col: span.col,
                    message: "parameter declared void".into(),
                });
            }
            let name = match self.peek() {
                Tok::Ident(_) => Some(self.ident()?.0),
                _ if need_names => return self.unexpected("parameter name"),
                _ => None,
            };
            params.push(Param { name, ty, span });
            if self.eat(&Tok::RParen) {
                return Ok(params);
            }
            self.expect(Tok::Comma, "`,` or `)`")?;
        }
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut stmts = Vec::new();
        while !self.eat(&Tok::RBrace) {
            if self.peek() == &Tok::Eof {
                return self.unexpected("`}`");
            }
            stmts.push(self.stmt()?);
        }
        Ok(stmts)
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let span = self.span();
        match self.peek().clone() {
            Tok::LBrace => Ok(Stmt::Block(self.block()?)),
            Tok::If => {
                self.bump();
                self.expect(Tok::LParen, "`(` after `if`")?;
                let cond = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                let then_branch = Box::new(self.stmt()?);
                let else_branch = if self.eat(&Tok::Else) {
                    Some(Box::new(self.stmt()?))
                } else {
                    None
                };
                Ok(Stmt::If(IfStmt {
                    cond,
                    then_branch,
                    else_branch,
                    class: None,
                    span,
                }))
            }
            Tok::Return => {
                self.bump();
                let value = if self.peek() == &Tok::Semi {
                    None
                } else {
                    Some(self.expr()?)
                };
                self.expect(Tok::Semi, "`;`")?;
                Ok(Stmt::Return { value, span })
            }
            t if Self::type_keyword(&t).is_some() => {
                let ty = self.ty()?;
                if ty == Type::Void {
                    return Err(LangError::Syntax {
                        line: span.line,
                        col: span.col,
                        message: "local variable declared void".into(),
                    });
                }
                let (name, _) = self.ident()?;
                let init = if self.eat(&Tok::Assign) {
                    Some(self.expr()?)
                } else {
                    None
                };
                self.expect(Tok::Semi, "`;`")?;
                Ok(Stmt::Local {
                    name,
                    ty,
                    init,
                    span,
                })
            }
            Tok::Ident(name) if self.peek_at(1) == &Tok::Assign => {
                self.bump();
                self.bump();
                let value = self.expr()?;
                self.expect(Tok::Semi, "`;`")?;
                Ok(Stmt::Assign { name, value, span })
            }
            _ => {
                let e = self.expr()?;
                self.expect(Tok::Semi, "`;`")?;
                Ok(Stmt::Expr(e))
            }
        }
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.additive()?;
        loop {
            let op = match self.peek() {
                Tok::EqEq => BinOp::Eq,
                Tok::NotEq => BinOp::Ne,
                _ => return Ok(lhs),
            };
            let span = self.bump().span;
            let rhs = self.additive()?;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
    }

    fn additive(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            let span = self.bump().span;
            let rhs = self.unary()?;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.peek() == &Tok::Minus {
            let span = self.bump().span;
            let inner = self.unary()?;
            return Ok(Expr::new(ExprKind::Neg(Box::new(inner)), span));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Int(k) => {
                self.bump();
                Ok(Expr::new(ExprKind::Int(k), span))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::new(ExprKind::Str(s), span))
            }
            Tok::Null => {
                self.bump();
                Ok(Expr::new(ExprKind::Null, span))
            }
            Tok::Ident(name) => {
                self.bump();
                if !self.eat(&Tok::LParen) {
                    return Ok(Expr::new(ExprKind::Ident(name), span));
                }
                let mut args = Vec::new();
                if !self.eat(&Tok::RParen) {
                    loop {
                        args.push(self.expr()?);
                        if self.eat(&Tok::RParen) {
                            break;
                        }
                        self.expect(Tok::Comma, "`,` or `)`")?;
                    }
                }
                Ok(Expr::new(ExprKind::Call(name, args), span))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            _ => self.unexpected("expression"),
        }
    }
}

/// Parse a translation unit into an unclassified [`Ast`].
pub fn parse(unit: &SourceUnit) -> Result<Ast, LangError> {
    let toks = tokenize(&unit.body)?;
    Parser { toks, pos: 0 }.program()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn src(s: &str) -> SourceUnit {
        SourceUnit::new("t.mc", s)
    }

    #[test]
    fn container_function_with_fac() {
        let ast = parse(&src(
            "extern void foo();\nvoid container_function() { if (foo) foo(); }",
        ))
        .unwrap();
        assert_eq!(ast.extern_funcs.len(), 1);
        assert_eq!(ast.functions.len(), 1);
        assert!(ast.globals.is_empty() && ast.extern_vars.is_empty());
        let ifs = ast.if_stmts();
        assert_eq!(ifs.len(), 1);
        assert_eq!(ifs[0].cond.as_ident(), Some("foo"));
        assert_eq!(ifs[0].class, None);
    }

    #[test]
    fn empty_body_gives_empty_ast() {
        assert_eq!(parse(&src("")).unwrap(), Ast::default());
        assert_eq!(
            parse(&src("  // only a comment\n")).unwrap(),
            Ast::default()
        );
    }

    #[test]
    fn unclosed_condition_reports_offending_token() {
        let e = parse(&src("void f() {\n  if (foo\n}")).unwrap_err();
        match e {
            LangError::Syntax { line, col, message } => {
                assert_eq!((line, col), (3, 1));
                assert!(message.contains("`)`"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        let e = parse(&src("if (foo")).unwrap_err();
        assert!(matches!(
            e,
            LangError::Syntax {
                line: 1,
                col: 1,
                ..
            }
        ));
    }

    #[test]
    fn weak_and_data_declarations() {
        let ast = parse(&src(
            "weak extern int w(int, str);\nextern int counter;\nint g = -4;\nstr s = \"x\";\nhandle h = null;",
        ))
        .unwrap();
        assert!(ast.extern_funcs[0].weak);
        assert_eq!(ast.extern_funcs[0].params.len(), 2);
        assert_eq!(ast.extern_vars[0].name, "counter");
        assert_eq!(ast.globals[0].init, Some(Literal::Int(-4)));
        assert_eq!(ast.globals[1].init, Some(Literal::Str("x".into())));
        assert_eq!(ast.globals[2].init, Some(Literal::Null));
    }

    #[test]
    fn weak_variable_is_rejected() {
        assert!(parse(&src("weak extern int v;")).is_err());
        assert!(parse(&src("weak int f() {}")).is_err());
    }

    #[test]
    fn precedence_equality_binds_looser_than_additive() {
        let ast = parse(&src("int f() { return 1 + 2 == 3 - -1; }")).unwrap();
        let Stmt::Return { value: Some(e), .. } = &ast.functions[0].body[0] else {
            panic!()
        };
        let ExprKind::Binary(BinOp::Eq, l, r) = &e.kind else {
            panic!("{e:?}")
        };
        assert!(matches!(l.kind, ExprKind::Binary(BinOp::Add, ..)));
        assert!(matches!(r.kind, ExprKind::Binary(BinOp::Sub, ..)));
    }

    #[test]
    fn if_else_and_blocks() {
        let ast = parse(&src("void f() { if (x) { a(); b(); } else c(); }")).unwrap();
        let ifs = ast.if_stmts();
        assert!(ifs[0].else_branch.is_some());
        assert!(matches!(*ifs[0].then_branch, Stmt::Block(ref b) if b.len() == 2));
    }

    #[test]
    fn definitions_need_parameter_names() {
        assert!(parse(&src("void f(int) {}")).is_err());
        assert!(parse(&src("extern void f(int);")).is_ok());
        assert!(parse(&src("void f(void) {}")).is_ok());
    }
}
