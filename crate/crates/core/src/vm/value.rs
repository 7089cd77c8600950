use std::fmt;

use crate::object::DataInit;

/// A function in some loaded module.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CodeAddr {
    /// Index into the process module arena.
    pub module: u32,
    pub func: u32,
}

/// A data slot in some loaded module.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DataAddr {
    pub module: u32,
    pub index: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuntimeValue {
    Int(i64),
    Str(String),
    /// Id of an entry in the runtime-opened library namespace.
    Handle(Option<u32>),
    FuncRef(Option<CodeAddr>),
    Unit,
}

impl RuntimeValue {
    pub fn from_init(d: &DataInit, strings: &crate::object::StringPool) -> RuntimeValue {
        match *d {
            DataInit::Int(k) => RuntimeValue::Int(k),
            DataInit::Str(s) => RuntimeValue::Str(strings.get(s).unwrap_or("").to_owned()),
            DataInit::NullHandle => RuntimeValue::Handle(None),
            DataInit::NullFuncRef => RuntimeValue::FuncRef(None),
        }
    }

    /// Truth value for `JZ`: zero, empty strings, nulls and unit are false.
    pub fn truthy(&self) -> bool {
        match self {
            RuntimeValue::Int(k) => *k != 0,
            RuntimeValue::Str(s) => !s.is_empty(),
            RuntimeValue::Handle(h) => h.is_some(),
            RuntimeValue::FuncRef(f) => f.is_some(),
            RuntimeValue::Unit => false,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            RuntimeValue::Int(_) => "int",
            RuntimeValue::Str(_) => "str",
            RuntimeValue::Handle(_) => "handle",
            RuntimeValue::FuncRef(_) => "fnref",
            RuntimeValue::Unit => "void",
        }
    }
}

impl fmt::Display for RuntimeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuntimeValue::Int(k) => write!(f, "{k}"),
            RuntimeValue::Str(s) => f.write_str(s),
            RuntimeValue::Handle(None) | RuntimeValue::FuncRef(None) => f.write_str("null"),
            RuntimeValue::Handle(Some(h)) => write!(f, "handle#{h}"),
            RuntimeValue::FuncRef(Some(a)) => write!(f, "fn@{}:{}", a.module, a.func),
            RuntimeValue::Unit => f.write_str("()"),
        }
    }
}
