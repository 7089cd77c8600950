//! Frontend for the mini language: lexing, parsing, name/type checks and
//! classification of `if` conditions.
//!
//! The grammar is documented in `docs/grammar.md`.

mod analyze;
pub mod ast;
mod classify;
mod lexer;
mod parser;
pub mod scope;

use std::fmt;

use thiserror::Error;

pub use analyze::analyze;
pub use ast::*;
pub use classify::classify_conditions;
pub use parser::parse;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LangError {
    #[error("{message}")]
    Syntax {
        line: u32,
        col: u32,
        message: String,
    },
    #[error("undeclared identifier `{name}`")]
    UndeclaredIdentifier { name: String, line: u32, col: u32 },
    #[error("`{name}` is declared more than once")]
    DuplicateName { name: String, line: u32, col: u32 },
    #[error("{message}")]
    Semantic {
        line: u32,
        col: u32,
        message: String,
    },
}

impl LangError {
    pub fn span(&self) -> Span {
        match *self {
            LangError::Syntax { line, col, .. }
            | LangError::UndeclaredIdentifier { line, col, .. }
            | LangError::DuplicateName { line, col, .. }
            | LangError::Semantic { line, col, .. } => Span::new(line, col),
        }
    }

    pub fn to_diagnostic(&self) -> Diagnostic {
        Diagnostic {
            severity: Severity::Error,
            span: self.span(),
            message: self.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub span: Span,
    pub message: String,
}

impl Diagnostic {
    pub fn warning(span: Span, message: impl Into<String>) -> Diagnostic {
        Diagnostic {
            severity: Severity::Warning,
            span,
            message: message.into(),
        }
    }

    /// `file:line:col: severity: message`
    pub fn render(&self, file: &str) -> String {
        format!(
            "{file}:{}:{}: {}: {}",
            self.span.line, self.span.col, self.severity, self.message
        )
    }
}

/// Parse, check and classify a unit in one go.
pub fn frontend(unit: &SourceUnit) -> Result<(Ast, Vec<Diagnostic>), LangError> {
    let ast = parse(unit)?;
    analyze(&ast)?;
    classify_conditions(ast)
}
