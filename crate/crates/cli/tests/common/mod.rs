#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const LIBS: [&str; 3] = ["libjpeg", "libpng", "libgif"];

pub fn bin(tool: &str) -> PathBuf {
    let p = match tool {
        "fac" => env!("CARGO_BIN_EXE_fac"),
        "facc" => env!("CARGO_BIN_EXE_facc"),
        "facld" => env!("CARGO_BIN_EXE_facld"),
        "facstub" => env!("CARGO_BIN_EXE_facstub"),
        "facrun" => env!("CARGO_BIN_EXE_facrun"),
        "facinspect" => env!("CARGO_BIN_EXE_facinspect"),
        "facbench" => env!("CARGO_BIN_EXE_facbench"),
        other => panic!("no tool {other}"),
    };
    PathBuf::from(p)
}

pub fn tool<I, S>(name: &str, args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(bin(name))
        .args(args)
        .env_remove("FAC_LIBRARY_PATH")
        .env_remove("FAC_BENCH")
        .output()
        .unwrap()
}

/// Runs a tool and panics unless it exits 0.
pub fn ok<I, S>(name: &str, args: I) -> String
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    let out = tool(name, args);
    assert!(
        out.status.success(),
        "{name} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

pub fn corpus(file: &str) -> PathBuf {
    fac_core::demo::corpus_dir().join(file)
}

/// The demo built with the command-line tools alone.
pub struct Demo {
    pub dir: tempfile::TempDir,
}

impl Demo {
    pub fn build() -> Demo {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        let s = |p: &Path| p.to_str().unwrap().to_owned();
        for lib in LIBS {
            let obj = d.join(format!("{lib}.faco"));
            ok(
                "facc",
                [s(&corpus(&format!("{lib}.mc"))), "-o".into(), s(&obj)],
            );
            ok(
                "facld",
                [
                    "--shared".into(),
                    "--name".into(),
                    lib.into(),
                    "-o".into(),
                    s(&d.join(format!("{lib}.facl"))),
                    s(&obj),
                ],
            );
        }
        let needed: Vec<String> = LIBS
            .iter()
            .flat_map(|l| ["--needed".to_owned(), l.to_string()])
            .collect();
        for (name, mode) in [("mime_fac", "fac"), ("mime_weak", "weak")] {
            let obj = d.join(format!("{name}.faco"));
            ok(
                "facc",
                [
                    format!("--mode={mode}"),
                    s(&corpus("mime_fac.mc")),
                    "-o".into(),
                    s(&obj),
                ],
            );
            let mut args = vec!["--tolerant".to_owned(), "--name".into(), name.into()];
            args.extend(needed.iter().cloned());
            args.extend(["-o".into(), s(&d.join(format!("{name}.facx"))), s(&obj)]);
            ok("facld", args);
        }
        let obj = d.join("mime_dyn.faco");
        ok("facc", [s(&corpus("mime_dyn.mc")), "-o".into(), s(&obj)]);
        ok(
            "facld",
            [
                "--strict".into(),
                "-o".into(),
                s(&d.join("mime_dyn.facx")),
                s(&obj),
            ],
        );
        Demo { dir }
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.dir.path().join(file)
    }

    pub fn lib(&self, name: &str) -> PathBuf {
        self.path(&format!("{name}.facl"))
    }

    /// Directory holding exactly the libraries whose letters are in `label`.
    pub fn stage(&self, label: &str) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        for lib in LIBS {
            if label.contains(&lib[3..4]) {
                std::fs::copy(self.lib(lib), dir.path().join(format!("{lib}.facl"))).unwrap();
            }
        }
        dir
    }
}

pub const LABELS: [&str; 8] = ["jpg", "jp", "jg", "pg", "j", "p", "g", "none"];

/// Demo output for a combo, from the dispatcher's intended behaviour.
pub fn expected_stdout(label: &str) -> String {
    let mut s = String::from("text:handled\n");
    for (letter, name) in [('j', "jpeg"), ('p', "png"), ('g', "gif")] {
        let state = if label != "none" && label.contains(letter) {
            "handled"
        } else {
            "unavailable"
        };
        s += &format!("{name}:{state}\n");
    }
    s
}
