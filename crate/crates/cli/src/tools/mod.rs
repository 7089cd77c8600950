pub mod facbench;
pub mod facc;
pub mod facinspect;
pub mod facld;
pub mod facrun;
pub mod facstub;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Parser;
use fac_core::object::{decode_module, encode_module, ObjectModule};

/// Parse arguments, turning clap's help and usage errors into an exit code.
pub fn parse<T: Parser>(argv: Vec<OsString>) -> Result<T, i32> {
    T::try_parse_from(argv).map_err(|e| {
        let _ = e.print();
        e.exit_code()
    })
}

/// Report a tool failure and return the exit code.
pub fn fail(tool: &str, err: &anyhow::Error) -> i32 {
    eprintln!("{tool}: {err:#}");
    1
}

pub fn read_module(path: &Path) -> anyhow::Result<ObjectModule> {
    let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    decode_module(&bytes).map_err(|e| {
        anyhow::anyhow!(
            "{}: format error at offset {}: {}",
            path.display(),
            e.offset,
            e.reason
        )
    })
}

pub fn write_module(path: &Path, m: &ObjectModule) -> anyhow::Result<()> {
    let bytes = encode_module(m)?;
    std::fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

/// File stem, used as the default module name.
pub fn stem(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("a")
        .to_owned()
}

pub fn default_output(input: &Path, ext: &str) -> PathBuf {
    input.with_extension(ext)
}
