//! Evaluation harness: availability matrix, startup timing and line counts.

mod loc;
mod matrix;
mod timing;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::loader::LoadError;

pub use loc::{compare_loc, count_loc, LocReport};
pub use matrix::{parse_expectations, run_matrix, MatrixReport, MatrixRow};
pub use timing::{
    measure_init, measure_interleaved, monotonic_ns, TimingRow, TimingSpec, PROBE_ENV, PROBE_PREFIX,
};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("at least {min} repetitions are required, got {got}")]
    TooFewReps { min: usize, got: usize },
    #[error("run failed with exit code {code}: {stderr}")]
    RunFailed { code: i32, stderr: String },
    #[error("runner printed no timing probe")]
    NoProbe,
    #[error("expectations: {0}")]
    Expectations(String),
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Io {
        path: path.to_owned(),
        source,
    }
}

/// An optional library available to the harness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptionalLib {
    pub name: String,
    pub file: PathBuf,
}

impl OptionalLib {
    pub fn new(name: impl Into<String>, file: impl Into<PathBuf>) -> OptionalLib {
        OptionalLib {
            name: name.into(),
            file: file.into(),
        }
    }

    /// `<dir>/<name>.facl`
    pub fn in_dir(dir: &Path, name: &str) -> OptionalLib {
        OptionalLib::new(name, dir.join(crate::loader::SearchPath::file_name(name)))
    }
}

/// A subset of the optional libraries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Combo {
    pub label: String,
    pub libs: Vec<OptionalLib>,
    pub total_bytes: u64,
}

/// One-letter tag of a library: first character after a `lib` prefix.
pub fn lib_letter(name: &str) -> char {
    name.strip_prefix("lib")
        .unwrap_or(name)
        .chars()
        .next()
        .unwrap_or('?')
}

/// `jpg` for libjpeg+libpng+libgif, `none` for the empty set. Letters follow
/// the order of `libs`.
pub fn combo_label<'a>(libs: impl IntoIterator<Item = &'a str>) -> String {
    let s: String = libs.into_iter().map(lib_letter).collect();
    if s.is_empty() {
        "none".to_owned()
    } else {
        s
    }
}

/// All `2^n` subsets, by decreasing total file size, ties by label.
pub fn all_combos(libs: &[OptionalLib]) -> Result<Vec<Combo>, BenchError> {
    let mut sizes = Vec::with_capacity(libs.len());
    for l in libs {
        sizes.push(std::fs::metadata(&l.file).map_err(io_err(&l.file))?.len());
    }
    let mut combos: Vec<Combo> = (0u32..1 << libs.len())
        .map(|mask| {
            let picked: Vec<usize> = (0..libs.len()).filter(|i| mask & (1 << i) != 0).collect();
            Combo {
                label: combo_label(picked.iter().map(|&i| libs[i].name.as_str())),
                libs: picked.iter().map(|&i| libs[i].clone()).collect(),
                total_bytes: picked.iter().map(|&i| sizes[i]).sum(),
            }
        })
        .collect();
    combos.sort_by(|a, b| {
        b.total_bytes
            .cmp(&a.total_bytes)
            .then_with(|| a.label.cmp(&b.label))
    });
    Ok(combos)
}

/// Copy the combo's libraries into a fresh directory.
pub fn stage(combo: &Combo) -> Result<tempfile::TempDir, BenchError> {
    let dir = tempfile::tempdir().map_err(io_err(Path::new("<tempdir>")))?;
    for l in &combo.libs {
        let to = dir
            .path()
            .join(crate::loader::SearchPath::file_name(&l.name));
        std::fs::copy(&l.file, &to).map_err(io_err(&l.file))?;
    }
    Ok(dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels() {
        assert_eq!(combo_label(["libjpeg", "libpng", "libgif"]), "jpg");
        assert_eq!(combo_label(["libjpeg", "libpng"]), "jp");
        assert_eq!(combo_label([]), "none");
    }

    #[test]
    fn combos_ordered_by_size_then_label() {
        let dir = tempfile::tempdir().unwrap();
        for (n, len) in [("libjpeg", 30), ("libpng", 20), ("libgif", 10)] {
            std::fs::write(dir.path().join(format!("{n}.facl")), vec![0u8; len]).unwrap();
        }
        let libs: Vec<_> = ["libjpeg", "libpng", "libgif"]
            .iter()
            .map(|n| OptionalLib::in_dir(dir.path(), n))
            .collect();
        let labels: Vec<_> = all_combos(&libs)
            .unwrap()
            .into_iter()
            .map(|c| c.label)
            .collect();
        // j and pg tie at 30 bytes.
        assert_eq!(labels, vec!["jpg", "jp", "jg", "j", "pg", "p", "g", "none"]);
    }

    #[test]
    fn staging_is_isolated() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("liba.facl"), b"a").unwrap();
        let c = Combo {
            label: "a".into(),
            libs: vec![OptionalLib::in_dir(dir.path(), "liba")],
            total_bytes: 1,
        };
        let s1 = stage(&c).unwrap();
        let s2 = stage(&Combo {
            label: "none".into(),
            libs: vec![],
            total_bytes: 0,
        })
        .unwrap();
        assert!(s1.path().join("liba.facl").exists());
        assert_eq!(std::fs::read_dir(s2.path()).unwrap().count(), 0);
    }
}
