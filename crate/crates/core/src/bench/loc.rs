use std::path::{Path, PathBuf};

use super::{io_err, BenchError};

#[derive(Debug, Clone, PartialEq)]
pub struct LocReport {
    pub file_a: PathBuf,
    pub file_b: PathBuf,
    pub lines_a: usize,
    pub lines_b: usize,
    /// `lines_a / lines_b`; `None` when `lines_b` is zero.
    pub ratio: Option<f64>,
}

impl LocReport {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let ratio = self.ratio.map(|r| format!("{r:.4}")).unwrap_or_default();
        w.write_record(["file_a", "file_b", "lines_a", "lines_b", "ratio"])
            .expect("in-memory write");
        w.write_record([
            self.file_a.display().to_string(),
            self.file_b.display().to_string(),
            self.lines_a.to_string(),
            self.lines_b.to_string(),
            ratio,
        ])
        .expect("in-memory write");
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }
}

/// Lines that still hold something after removing `//` comments and
/// whitespace. `//` inside a string literal is not a comment.
pub fn count_loc(text: &str) -> usize {
    text.lines()
        .filter(|l| !strip_comment(l).trim().is_empty())
        .count()
}

fn strip_comment(line: &str) -> &str {
    let b = line.as_bytes();
    let mut in_str = false;
    let mut i = 0;
    while i < b.len() {
        match b[i] {
            b'\\' if in_str => i += 1,
            b'"' => in_str = !in_str,
            b'/' if !in_str && b.get(i + 1) == Some(&b'/') => return &line[..i],
            _ => {}
        }
        i += 1;
    }
    line
}

pub fn compare_loc(a: &Path, b: &Path) -> Result<LocReport, BenchError> {
    let ta = std::fs::read_to_string(a).map_err(io_err(a))?;
    let tb = std::fs::read_to_string(b).map_err(io_err(b))?;
    let (la, lb) = (count_loc(&ta), count_loc(&tb));
    Ok(LocReport {
        file_a: a.to_owned(),
        file_b: b.to_owned(),
        lines_a: la,
        lines_b: lb,
        ratio: (lb > 0).then(|| la as f64 / lb as f64),
    })
}
