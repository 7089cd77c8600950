//! Function availability checks: a small compiler, link editor, tolerant
//! loader and bytecode VM.

pub mod bench;
pub mod codegen;
pub mod demo;
pub mod isa;
pub mod lang;
pub mod link;
pub mod loader;
pub mod object;
pub mod pipeline;
pub mod vm;
