use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::Parser;
use fac_core::bench::{monotonic_ns, PROBE_ENV, PROBE_PREFIX};
use fac_core::loader::{load_file, SearchPath};
use fac_core::vm::{run_with, VmConfig};

use super::parse;

/// Load an executable with whatever needed libraries are present and run it.
///
/// Exits with the program's exit code, or with the trap code when it traps.
#[derive(Debug, Parser)]
#[command(name = "facrun")]
struct Args {
    /// Library directory, searched before FAC_LIBRARY_PATH. Repeatable.
    #[arg(long = "path", value_name = "DIR")]
    paths: Vec<PathBuf>,
    #[arg(long, value_parser = super::facinspect::parse_bind, default_value = "lazy")]
    bind: fac_core::loader::BindPolicy,
    exec: PathBuf,
    /// Integer arguments passed to `main`.
    #[arg(allow_negative_numbers = true)]
    args: Vec<i64>,
}

pub fn main(argv: Vec<OsString>) -> i32 {
    let args: Args = match parse(argv) {
        Ok(a) => a,
        Err(code) => return code,
    };
    let search = SearchPath::from_process_env(&args.paths);
    let mut p = match load_file(&args.exec, &search, args.bind) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("facrun: {e}");
            return e.exit_code();
        }
    };
    let mut cfg = VmConfig::default();
    if std::env::var(PROBE_ENV).as_deref() == Ok("1") {
        cfg.on_main_entry = Some(Box::new(|| eprintln!("{PROBE_PREFIX} {}", monotonic_ns())));
    }
    let report = run_with(&mut p, &args.args, cfg);
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(report.stdout.as_bytes());
    let _ = out.flush();
    if let Some(t) = &report.trap {
        eprintln!("facrun: {t}");
    }
    report.exit_code
}
