use std::ffi::OsString;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, ValueEnum};
use fac_core::codegen::{CodegenMode, CodegenOptions};
use fac_core::pipeline::{compile_source, BuildError};

use super::{default_output, fail, parse, stem, write_module};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Fac,
    Weak,
}

/// Compile one source file to a relocatable module.
#[derive(Debug, Parser)]
#[command(name = "facc")]
struct Args {
    /// How availability checks are lowered.
    #[arg(long, value_enum, default_value = "fac")]
    mode: Mode,
    /// Keep conditions on internal functions as runtime tests.
    #[arg(long)]
    no_fold: bool,
    /// Print the emitted instruction count.
    #[arg(long)]
    stats: bool,
    #[arg(short = 'o', value_name = "FILE")]
    output: Option<PathBuf>,
    input: PathBuf,
}

pub fn main(argv: Vec<OsString>) -> i32 {
    let args: Args = match parse(argv) {
        Ok(a) => a,
        Err(code) => return code,
    };
    let file = args.input.display().to_string();
    let src =
        match std::fs::read_to_string(&args.input).with_context(|| format!("cannot read {file}")) {
            Ok(s) => s,
            Err(e) => return fail("facc", &e),
        };
    let mode = match args.mode {
        Mode::Fac => CodegenMode::FacNative,
        Mode::Weak => CodegenMode::WeakAlias,
    };
    let opts = CodegenOptions {
        mode,
        optimize: !args.no_fold,
    };
    let (module, diags) = match compile_source(&stem(&args.input), &src, opts) {
        Ok(r) => r,
        Err(BuildError::Lang(e)) => {
            eprintln!("{}", e.to_diagnostic().render(&file));
            return 1;
        }
        Err(e) => return fail("facc", &e.into()),
    };
    for d in &diags {
        eprintln!("{}", d.render(&file));
    }
    let out = args
        .output
        .unwrap_or_else(|| default_output(&args.input, "faco"));
    if let Err(e) = write_module(&out, &module) {
        return fail("facc", &e);
    }
    if args.stats {
        println!("instructions\t{}", module.instruction_count());
    }
    0
}
