use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use fac_core::bench::{
    all_combos, combo_label, compare_loc, measure_interleaved, parse_expectations, run_matrix,
    Combo, OptionalLib, TimingRow, TimingSpec,
};
use fac_core::loader::{read_executable, BindPolicy, SearchPath};

use super::facinspect::parse_bind;
use super::{fail, parse};

/// Evaluation harness. Every subcommand writes CSV to standard output.
#[derive(Debug, Parser)]
#[command(name = "facbench")]
struct Args {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Run the executable under every subset of its optional libraries.
    Matrix {
        #[arg(long)]
        exec: PathBuf,
        /// Directory holding the optional `.facl` files.
        #[arg(long)]
        libs: PathBuf,
        /// JSON object mapping combo labels to expected output.
        #[arg(long)]
        expect: PathBuf,
        /// Optional library names; defaults to the executable's needed list.
        #[arg(long = "lib", value_name = "NAME")]
        lib_names: Vec<String>,
        #[arg(long, value_parser = parse_bind, default_value = "lazy")]
        bind: BindPolicy,
    },
    /// Time process launch to entry of `main`. Several `--exec` values are
    /// measured in alternation, each paired with the `--variant` at the same
    /// position.
    Init {
        #[arg(long, required = true)]
        exec: Vec<PathBuf>,
        /// Comma-separated library names to make available; `none` or empty
        /// for no libraries.
        #[arg(long, default_value = "", conflicts_with = "all_combos")]
        combo: String,
        /// Time every subset of the optional libraries, largest first.
        #[arg(long)]
        all_combos: bool,
        /// Optional library names for `--all-combos`; defaults to the
        /// executable's needed list.
        #[arg(long = "lib", value_name = "NAME")]
        lib_names: Vec<String>,
        #[arg(long, value_parser = parse_bind, default_value = "lazy")]
        bind: BindPolicy,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        /// Directory holding the `.facl` files; defaults to the search path.
        #[arg(long)]
        libs: Option<PathBuf>,
        /// Label for the variant column, one per `--exec`; defaults to FAC.
        #[arg(long)]
        variant: Vec<String>,
        /// The `facrun` binary to launch; defaults to the one next to this
        /// program.
        #[arg(long)]
        runner: Option<PathBuf>,
    },
    /// Count non-blank, non-comment lines of two files.
    Loc { a: PathBuf, b: PathBuf },
}

pub fn main(argv: Vec<OsString>) -> i32 {
    let args: Args = match parse(argv) {
        Ok(a) => a,
        Err(code) => return code,
    };
    match execute(args.cmd) {
        Ok(code) => code,
        Err(e) => fail("facbench", &e),
    }
}

fn execute(cmd: Cmd) -> anyhow::Result<i32> {
    match cmd {
        Cmd::Matrix {
            exec,
            libs,
            expect,
            lib_names,
            bind,
        } => {
            let names = if lib_names.is_empty() {
                needed_of(&exec)?
            } else {
                lib_names
            };
            let optional: Vec<OptionalLib> = names
                .iter()
                .map(|n| OptionalLib::in_dir(&libs, n))
                .collect();
            let text = std::fs::read_to_string(&expect)
                .with_context(|| format!("cannot read {}", expect.display()))?;
            let report = run_matrix(&exec, &optional, &parse_expectations(&text)?, bind)?;
            print!("{}", report.to_csv());
            Ok(if report.all_pass() { 0 } else { 1 })
        }
        Cmd::Init {
            exec,
            combo,
            all_combos: every,
            lib_names,
            bind,
            reps,
            libs,
            variant,
            runner,
        } => {
            let variants = match variant.len() {
                0 if exec.len() == 1 => vec!["FAC".to_owned()],
                n if n == exec.len() => variant,
                n => bail!("{} executables but {n} variant labels", exec.len()),
            };
            let combos = if every {
                let names = if lib_names.is_empty() {
                    needed_of(&exec[0])?
                } else {
                    lib_names
                };
                let found = locate_all(
                    &names.iter().map(String::as_str).collect::<Vec<_>>(),
                    libs.as_deref(),
                )?;
                all_combos(&found)?
            } else {
                let names: Vec<&str> = combo
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty() && *s != "none")
                    .collect();
                vec![resolve_combo(&names, libs.as_deref())?]
            };
            let runner = match runner {
                Some(r) => r,
                None => sibling_runner()?,
            };
            let mut rows = Vec::with_capacity(combos.len() * exec.len());
            for combo in &combos {
                let specs: Vec<TimingSpec> = exec
                    .iter()
                    .zip(&variants)
                    .map(|(e, v)| TimingSpec {
                        runner: &runner,
                        exec: e,
                        variant: v,
                        combo,
                        policy: bind,
                        reps,
                    })
                    .collect();
                rows.extend(measure_interleaved(&specs)?);
            }
            print!("{}", TimingRow::to_csv(&rows));
            Ok(0)
        }
        Cmd::Loc { a, b } => {
            print!("{}", compare_loc(&a, &b)?.to_csv());
            Ok(0)
        }
    }
}

fn needed_of(exec: &Path) -> anyhow::Result<Vec<String>> {
    let img = read_executable(exec)?;
    Ok(img
        .module
        .needed_names()
        .into_iter()
        .map(str::to_owned)
        .collect())
}

fn locate_all(names: &[&str], libs: Option<&Path>) -> anyhow::Result<Vec<OptionalLib>> {
    let search = match libs {
        Some(d) => SearchPath::new([d]),
        None => SearchPath::from_process_env(&[]),
    };
    let mut found = Vec::new();
    for n in names {
        match search.locate(n) {
            Some(file) => found.push(OptionalLib::new(*n, file)),
            None => bail!("library `{n}` not found"),
        }
    }
    Ok(found)
}

fn resolve_combo(names: &[&str], libs: Option<&Path>) -> anyhow::Result<Combo> {
    let found = locate_all(names, libs)?;
    let mut combo = all_combos(&found)?
        .into_iter()
        .max_by_key(|c| c.libs.len())
        .expect("the full set exists");
    combo.label = combo_label(names.iter().copied());
    Ok(combo)
}

fn sibling_runner() -> anyhow::Result<PathBuf> {
    let me = std::env::current_exe().context("cannot locate this program")?;
    let runner = me.with_file_name(format!("facrun{}", std::env::consts::EXE_SUFFIX));
    if !runner.is_file() {
        bail!("no facrun next to {}; pass --runner", me.display());
    }
    Ok(runner)
}
