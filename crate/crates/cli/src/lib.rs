//! Command-line front ends for the toolchain.
//!
//! Every tool is reachable through the multiplexed `fac` binary
//! (`fac facc ...`) and through its own binary (`facc ...`).

mod tools;

use std::ffi::OsString;
use std::path::Path;

pub const TOOLS: [&str; 6] = [
    "facc",
    "facld",
    "facstub",
    "facrun",
    "facinspect",
    "facbench",
];

/// Exit code for command-line usage errors.
pub const USAGE: i32 = 2;

/// Route `argv` to a tool. The tool is named by `argv[0]`'s file name or,
/// for the multiplexed binary, by `argv[1]`.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let prog = argv.first().map(tool_name).unwrap_or_default();
    if TOOLS.contains(&prog.as_str()) {
        return run_tool(&prog, argv);
    }
    match argv.get(1).and_then(|a| a.to_str()) {
        Some(t) if TOOLS.contains(&t) => run_tool(t, argv[1..].to_vec()),
        Some("--help" | "-h" | "help") => {
            print!("{}", multiplexer_usage());
            0
        }
        Some(other) => {
            eprintln!("fac: unknown tool `{other}`\n\n{}", multiplexer_usage());
            USAGE
        }
        None => {
            eprint!("{}", multiplexer_usage());
            USAGE
        }
    }
}

fn tool_name(arg0: &OsString) -> String {
    Path::new(arg0)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("")
        .to_owned()
}

fn multiplexer_usage() -> String {
    format!(
        "usage: fac <tool> [args...]\n\ntools: {}\n",
        TOOLS.join(", ")
    )
}

/// Run one tool; `argv[0]` is the tool's own name.
pub fn run_tool(tool: &str, argv: Vec<OsString>) -> i32 {
    match tool {
        "facc" => tools::facc::main(argv),
        "facld" => tools::facld::main(argv),
        "facstub" => tools::facstub::main(argv),
        "facrun" => tools::facrun::main(argv),
        "facinspect" => tools::facinspect::main(argv),
        "facbench" => tools::facbench::main(argv),
        other => {
            eprintln!("fac: unknown tool `{other}`");
            USAGE
        }
    }
}
