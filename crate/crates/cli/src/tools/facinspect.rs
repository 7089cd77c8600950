use std::ffi::OsString;
use std::fmt::Write;
use std::path::PathBuf;

use clap::{ArgGroup, Parser};
use fac_core::loader::{load_file, BindPolicy, SearchPath};
use fac_core::object::ObjectModule;

use super::{fail, parse, read_module};

pub fn parse_bind(s: &str) -> Result<BindPolicy, String> {
    BindPolicy::parse(s).ok_or_else(|| format!("expected `eager` or `lazy`, got `{s}`"))
}

/// Print a module's symbols or code, or the GOT an executable gets when
/// loaded against the current library directories.
///
/// Output is tab-separated, one record per line.
#[derive(Debug, Parser)]
#[command(name = "facinspect")]
#[command(group(ArgGroup::new("what").args(["got", "syms", "code"])))]
struct Args {
    /// Load the executable and print its GOT state (default).
    #[arg(long)]
    got: bool,
    /// Print the symbol table.
    #[arg(long)]
    syms: bool,
    /// Print a disassembly.
    #[arg(long)]
    code: bool,
    #[arg(long = "path", value_name = "DIR")]
    paths: Vec<PathBuf>,
    #[arg(long, value_parser = parse_bind, default_value = "lazy")]
    bind: BindPolicy,
    file: PathBuf,
}

fn symbols(m: &ObjectModule) -> String {
    let mut out = String::new();
    for (i, s) in m.symbols.iter().enumerate() {
        let loc = s
            .location
            .map(|l| l.to_string())
            .unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "SYM\t{i}\t{}\t{}\t{}\t{loc}",
            m.symbol_name(s),
            s.kind,
            s.binding
        );
    }
    for n in m.needed_names() {
        let _ = writeln!(out, "NEEDED\t{n}");
    }
    out
}

pub fn main(argv: Vec<OsString>) -> i32 {
    let args: Args = match parse(argv) {
        Ok(a) => a,
        Err(code) => return code,
    };
    if args.syms || args.code {
        let m = match read_module(&args.file) {
            Ok(m) => m,
            Err(e) => return fail("facinspect", &e),
        };
        print!(
            "{}",
            if args.syms {
                symbols(&m)
            } else {
                m.disassemble()
            }
        );
        return 0;
    }
    let search = SearchPath::from_process_env(&args.paths);
    match load_file(&args.file, &search, args.bind) {
        Ok(p) => {
            print!("{}", p.inspect().render());
            0
        }
        Err(e) => {
            eprintln!("facinspect: {e}");
            e.exit_code()
        }
    }
}
