use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(line: u32, col: u32) -> Span {
        Span { line, col }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Type {
    Int,
    Str,
    Handle,
    FnRef,
    Void,
    /// Type of the `null` literal; never written in source.
    Null,
}

impl Type {
    /// Can a value of type `actual` be stored where `self` is expected?
    pub fn accepts(self, actual: Type) -> bool {
        self == actual || (actual == Type::Null && matches!(self, Type::Handle | Type::FnRef))
    }

    pub fn is_value(self) -> bool {
        self != Type::Void
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Type::Int => "int",
            Type::Str => "str",
            Type::Handle => "handle",
            Type::FnRef => "fnref",
            Type::Void => "void",
            Type::Null => "null",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceUnit {
    pub name: String,
    pub body: String,
}

impl SourceUnit {
    pub fn new(name: impl Into<String>, body: impl Into<String>) -> SourceUnit {
        SourceUnit {
            name: name.into(),
            body: body.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    /// Extern declarations may leave parameters unnamed.
    pub name: Option<String>,
    pub ty: Type,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuncDef {
    pub name: String,
    pub ret: Type,
    pub params: Vec<Param>,
    pub body: Vec<Stmt>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternFuncDecl {
    pub name: String,
    pub ret: Type,
    pub params: Vec<Param>,
    pub weak: bool,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternVarDecl {
    pub name: String,
    pub ty: Type,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Literal {
    Int(i64),
    Str(String),
    Null,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalVarDecl {
    pub name: String,
    pub ty: Type,
    pub init: Option<Literal>,
    pub span: Span,
}

/// How an `if` condition is compiled.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CondClass {
    /// Availability check on an external function.
    Fac(String),
    /// Ordinary truthiness test of the condition value.
    Traditional,
    /// Condition names an internal function, which is always available.
    ConstTrue(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IfStmt {
    pub cond: Expr,
    pub then_branch: Box<Stmt>,
    pub else_branch: Option<Box<Stmt>>,
    pub class: Option<CondClass>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    Local {
        name: String,
        ty: Type,
        init: Option<Expr>,
        span: Span,
    },
    Assign {
        name: String,
        value: Expr,
        span: Span,
    },
    If(IfStmt),
    Block(Vec<Stmt>),
    Return {
        value: Option<Expr>,
        span: Span,
    },
    Expr(Expr),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Eq,
    Ne,
}

impl fmt::Display for BinOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    Int(i64),
    Str(String),
    Null,
    Ident(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Expr {
        Expr { kind, span }
    }

    pub fn as_ident(&self) -> Option<&str> {
        match &self.kind {
            ExprKind::Ident(n) => Some(n),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Ast {
    pub functions: Vec<FuncDef>,
    pub extern_funcs: Vec<ExternFuncDecl>,
    pub extern_vars: Vec<ExternVarDecl>,
    pub globals: Vec<GlobalVarDecl>,
}

impl Ast {
    /// Every `if` statement in source order.
    pub fn if_stmts(&self) -> Vec<&IfStmt> {
        fn walk<'a>(s: &'a Stmt, out: &mut Vec<&'a IfStmt>) {
            match s {
                Stmt::If(i) => {
                    out.push(i);
                    walk(&i.then_branch, out);
                    if let Some(e) = &i.else_branch {
                        walk(e, out);
                    }
                }
                Stmt::Block(b) => b.iter().for_each(|s| walk(s, out)),
                _ => {}
            }
        }
        let mut out = Vec::new();
        for f in &self.functions {
            f.body.iter().for_each(|s| walk(s, &mut out));
        }
        out
    }
}
