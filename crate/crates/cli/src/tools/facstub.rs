use std::ffi::OsString;
use std::path::PathBuf;

use anyhow::Context;
use clap::Parser;
use fac_core::link::{gen_stub, parse_stub_spec};

use super::{fail, parse, stem, write_module};

/// Generate a dummy shared library whose functions trap when called.
///
/// The spec file holds one declaration per line, `func NAME/ARITY` or
/// `var NAME`; `#` starts a comment.
#[derive(Debug, Parser)]
#[command(name = "facstub")]
struct Args {
    #[arg(long, value_name = "FILE")]
    spec: PathBuf,
    /// Library name; defaults to the output file stem.
    #[arg(long)]
    name: Option<String>,
    #[arg(short = 'o', value_name = "FILE")]
    output: PathBuf,
}

pub fn main(argv: Vec<OsString>) -> i32 {
    let args: Args = match parse(argv) {
        Ok(a) => a,
        Err(code) => return code,
    };
    let run = || -> anyhow::Result<()> {
        let text = std::fs::read_to_string(&args.spec)
            .with_context(|| format!("cannot read {}", args.spec.display()))?;
        let name = args.name.clone().unwrap_or_else(|| stem(&args.output));
        let spec =
            parse_stub_spec(&name, &text).with_context(|| args.spec.display().to_string())?;
        write_module(&args.output, &gen_stub(&spec)?)
    };
    match run() {
        Ok(()) => 0,
        Err(e) => fail("facstub", &e),
    }
}
