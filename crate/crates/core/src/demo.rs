//! The bundled MIME dispatcher corpus and a helper that builds it.

use std::path::{Path, PathBuf};

use crate::bench::OptionalLib;
use crate::codegen::CodegenOptions;
use crate::link::LinkMode;
use crate::object::encode_module;
use crate::pipeline::{build_executable_with, build_library, BuildError};

pub const MIME_FAC: &str = include_str!("../examples/mime_fac.mc");
pub const MIME_DYN: &str = include_str!("../examples/mime_dyn.mc");
pub const LIBJPEG: &str = include_str!("../examples/libjpeg.mc");
pub const LIBPNG: &str = include_str!("../examples/libpng.mc");
pub const LIBGIF: &str = include_str!("../examples/libgif.mc");
pub const FIG2: &str = include_str!("../examples/fig2.mc");
pub const FIG4: &str = include_str!("../examples/fig4.mc");

/// Optional libraries in the order the FAC program lists them as needed.
pub const LIBS: [(&str, &str); 3] = [("libjpeg", LIBJPEG), ("libpng", LIBPNG), ("libgif", LIBGIF)];

/// Directory holding the `.mc` sources.
pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples")
}

/// Built artifacts, all in one directory.
#[derive(Debug, Clone)]
pub struct DemoBuild {
    pub fac: PathBuf,
    pub weak: PathBuf,
    pub dyn_: PathBuf,
    pub libs: Vec<OptionalLib>,
}

#[derive(Debug, thiserror::Error)]
pub enum DemoError {
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Compile and link the corpus into `dir`: `mime_fac.facx`,
/// `mime_weak.facx`, `mime_dyn.facx` and one `.facl` per library.
pub fn build_demo(dir: &Path) -> Result<DemoBuild, DemoError> {
    let names: Vec<&str> = LIBS.iter().map(|(n, _)| *n).collect();
    let write = |file: &str, m: &crate::object::ObjectModule| -> Result<PathBuf, DemoError> {
        let p = dir.join(file);
        std::fs::write(&p, encode_module(m).expect("linked modules validate"))?;
        Ok(p)
    };
    let mut libs = Vec::new();
    for (name, src) in LIBS {
        let m = build_library(name, src, &[])?;
        write(&format!("{name}.facl"), &m)?;
        libs.push(OptionalLib::in_dir(dir, name));
    }
    let fac = build_executable_with(
        "mime_fac",
        MIME_FAC,
        &names,
        LinkMode::Tolerant,
        CodegenOptions::default(),
    )?;
    let weak = build_executable_with(
        "mime_weak",
        MIME_FAC,
        &names,
        LinkMode::Tolerant,
        CodegenOptions::weak(),
    )?;
    let dyn_ = build_executable_with(
        "mime_dyn",
        MIME_DYN,
        &[],
        LinkMode::Strict,
        CodegenOptions::default(),
    )?;
    Ok(DemoBuild {
        fac: write("mime_fac.facx", &fac)?,
        weak: write("mime_weak.facx", &weak)?,
        dyn_: write("mime_dyn.facx", &dyn_)?,
        libs,
    })
}
