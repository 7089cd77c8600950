//! Source-to-module shortcuts used by the tools and tests.

use thiserror::Error;

use crate::codegen::{compile_unit, CodegenError, CodegenOptions};
use crate::lang::{frontend, Diagnostic, LangError, SourceUnit};
use crate::link::{link, LinkError, LinkMode};
use crate::object::{ModuleKind, ObjectModule};

#[derive(Debug, Error)]
pub enum BuildError {
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error(transparent)]
    Codegen(#[from] CodegenError),
    #[error(transparent)]
    Link(#[from] LinkError),
}

/// Frontend plus code generation for one source file.
pub fn compile_source(
    name: &str,
    src: &str,
    opts: CodegenOptions,
) -> Result<(ObjectModule, Vec<Diagnostic>), BuildError> {
    let (ast, diags) = frontend(&SourceUnit::new(format!("{name}.mc"), src))?;
    Ok((compile_unit(&ast, name, opts)?, diags))
}

/// Compile and link a single-file shared library. Its externals stay
/// unresolved for the loader.
pub fn build_library(name: &str, src: &str, needed: &[&str]) -> Result<ObjectModule, BuildError> {
    let (obj, _) = compile_source(name, src, CodegenOptions::default())?;
    Ok(link(
        &[obj],
        name,
        ModuleKind::SharedLib,
        LinkMode::Tolerant,
        needed,
    )?)
}

pub fn build_executable(
    name: &str,
    src: &str,
    needed: &[&str],
    mode: LinkMode,
) -> Result<ObjectModule, BuildError> {
    build_executable_with(name, src, needed, mode, CodegenOptions::default())
}

pub fn build_executable_with(
    name: &str,
    src: &str,
    needed: &[&str],
    mode: LinkMode,
    opts: CodegenOptions,
) -> Result<ObjectModule, BuildError> {
    let (obj, _) = compile_source(name, src, opts)?;
    Ok(link(&[obj], name, ModuleKind::Executable, mode, needed)?)
}
