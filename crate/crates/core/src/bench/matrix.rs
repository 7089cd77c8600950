use std::collections::BTreeMap;
use std::path::Path;

use super::{all_combos, stage, BenchError, OptionalLib};
use crate::loader::{load, read_executable, BindPolicy, SearchPath};
use crate::vm::run;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixRow {
    pub label: String,
    pub present: Vec<String>,
    pub total_bytes: u64,
    pub stdout: String,
    pub exit_code: i32,
    pub expected: Option<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixReport {
    pub rows: Vec<MatrixRow>,
}

impl MatrixReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    /// Labels of failing rows.
    pub fn failures(&self) -> Vec<&str> {
        self.rows
            .iter()
            .filter(|r| !r.pass)
            .map(|r| r.label.as_str())
            .collect()
    }

    pub fn row(&self, label: &str) -> Option<&MatrixRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    /// Header `combo,libs,total_bytes,exit_code,pass,stdout`; libraries are
    /// `+`-separated and newlines in `stdout` are written as `\n`, so each
    /// row is one line.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "combo",
            "libs",
            "total_bytes",
            "exit_code",
            "pass",
            "stdout",
        ])
        .expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.label.as_str(),
                &r.present.join("+"),
                &r.total_bytes.to_string(),
                &r.exit_code.to_string(),
                if r.pass { "true" } else { "false" },
                &r.stdout.replace('\\', "\\\\").replace('\n', "\\n"),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv of utf-8 fields")
    }
}

/// Parse a JSON object mapping combo labels to expected output.
pub fn parse_expectations(text: &str) -> Result<BTreeMap<String, String>, BenchError> {
    serde_json::from_str(text).map_err(|e| BenchError::Expectations(e.to_string()))
}

/// Run the executable once per subset of `optional`, each in its own staging
/// directory. The executable is read once and never rebuilt.
///
/// A row passes when the program exits 0 and its output equals the
/// expectation for its label.
pub fn run_matrix(
    exec: &Path,
    optional: &[OptionalLib],
    expectations: &BTreeMap<String, String>,
    policy: BindPolicy,
) -> Result<MatrixReport, BenchError> {
    let image = read_executable(exec)?;
    let mut rows = Vec::new();
    for combo in all_combos(optional)? {
        let dir = stage(&combo)?;
        let (stdout, exit_code) = match load(image.clone(), &SearchPath::new([dir.path()]), policy)
        {
            Ok(mut p) => {
                let r = run(&mut p, &[]);
                (r.stdout, r.exit_code)
            }
            Err(e) => (String::new(), e.exit_code()),
        };
        let expected = expectations.get(&combo.label).cloned();
        let pass = exit_code == 0 && expected.as_deref() == Some(stdout.as_str());
        rows.push(MatrixRow {
            present: combo.libs.iter().map(|l| l.name.clone()).collect(),
            label: combo.label,
            total_bytes: combo.total_bytes,
            stdout,
            exit_code,
            expected,
            pass,
        });
    }
    Ok(MatrixReport { rows })
}
