use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;
use fac_core::link::{link, LinkMode};
use fac_core::object::ModuleKind;

use super::{fail, parse, read_module, stem, write_module};

/// Link relocatable modules into an executable or a shared library.
///
/// Shared libraries given as inputs are not copied into the output; they
/// only satisfy strict completeness checks.
#[derive(Debug, Parser)]
#[command(name = "facld")]
struct Args {
    /// Reject undefined non-weak symbols not defined by an input (default).
    #[arg(long, conflicts_with = "tolerant")]
    strict: bool,
    /// Accept undefined symbols and give them slots anyway.
    #[arg(long)]
    tolerant: bool,
    /// Produce a shared library instead of an executable.
    #[arg(long)]
    shared: bool,
    /// Library the output needs at load time, in search order.
    #[arg(long, value_name = "NAME")]
    needed: Vec<String>,
    /// Module name recorded in the output; defaults to the output file stem.
    #[arg(long)]
    name: Option<String>,
    #[arg(short = 'o', value_name = "FILE")]
    output: PathBuf,
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

pub fn main(argv: Vec<OsString>) -> i32 {
    let args: Args = match parse(argv) {
        Ok(a) => a,
        Err(code) => return code,
    };
    let mut inputs = Vec::new();
    for p in &args.inputs {
        match read_module(p) {
            Ok(m) => inputs.push(m),
            Err(e) => return fail("facld", &e),
        }
    }
    let mode = if args.tolerant {
        LinkMode::Tolerant
    } else {
        LinkMode::Strict
    };
    let kind = if args.shared {
        ModuleKind::SharedLib
    } else {
        ModuleKind::Executable
    };
    let name = args.name.clone().unwrap_or_else(|| stem(&args.output));
    let needed: Vec<&str> = args.needed.iter().map(String::as_str).collect();
    match link(&inputs, &name, kind, mode, &needed) {
        Ok(m) => match write_module(&args.output, &m) {
            Ok(()) => 0,
            Err(e) => fail("facld", &e),
        },
        Err(e) => fail("facld", &e.into()),
    }
}
