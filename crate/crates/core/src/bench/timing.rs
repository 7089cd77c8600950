use std::path::Path;
use std::process::{Command, Stdio};

use super::{io_err, stage, BenchError, Combo};
use crate::loader::{BindPolicy, LIBRARY_PATH_VAR};

/// Set to `1` to make the runtime print a probe line at entry to `main`.
pub const PROBE_ENV: &str = "FAC_BENCH";
/// Probe line prefix on standard error, followed by a monotonic nanosecond
/// timestamp.
pub const PROBE_PREFIX: &str = "FAC_BENCH_PROBE";

pub const MIN_REPS: usize = 100;
const WARMUP: usize = 3;

/// `CLOCK_MONOTONIC` in nanoseconds. Comparable across processes on one host.
pub fn monotonic_ns() -> u64 {
    let mut ts = libc::timespec {
        tv_sec: 0,
        tv_nsec: 0,
    };
    // SAFETY: `ts` is a valid, writable timespec.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_MONOTONIC, &mut ts) };
    assert_eq!(
        rc, 0,
        "CLOCK_MONOTONIC is always available on supported platforms"
    );
    ts.tv_sec as u64 * 1_000_000_000 + ts.tv_nsec as u64
}

pub fn parse_probe(stderr: &str) -> Option<u64> {
    stderr
        .lines()
        .find_map(|l| l.strip_prefix(PROBE_PREFIX)?.trim().parse().ok())
}

#[derive(Debug, Clone)]
pub struct TimingSpec<'a> {
    /// The `facrun` binary.
    pub runner: &'a Path,
    pub exec: &'a Path,
    pub variant: &'a str,
    pub combo: &'a Combo,
    pub policy: BindPolicy,
    pub reps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub variant: String,
    pub combo: String,
    pub policy: BindPolicy,
    pub reps: usize,
    pub samples_us: Vec<f64>,
    pub median_us: f64,
    pub mean_us: f64,
}

impl TimingRow {
    pub const CSV_HEADER: [&'static str; 6] =
        ["variant", "combo", "policy", "reps", "median_us", "mean_us"];

    pub fn from_samples(
        variant: &str,
        combo: &str,
        policy: BindPolicy,
        samples_us: Vec<f64>,
    ) -> TimingRow {
        let mut sorted = samples_us.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let median_us = match n {
            0 => 0.0,
            _ if n % 2 == 1 => sorted[n / 2],
            _ => (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0,
        };
        let mean_us = if n == 0 {
            0.0
        } else {
            sorted.iter().sum::<f64>() / n as f64
        };
        TimingRow {
            variant: variant.to_owned(),
            combo: combo.to_owned(),
            policy,
            reps: n,
            samples_us,
            median_us,
            mean_us,
        }
    }

    pub fn to_csv(rows: &[TimingRow]) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(TimingRow::CSV_HEADER)
            .expect("in-memory write");
        for r in rows {
            w.write_record([
                r.variant.clone(),
                r.combo.clone(),
                r.policy.as_str().to_owned(),
                r.reps.to_string(),
                format!("{:.3}", r.median_us),
                format!("{:.3}", r.mean_us),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii csv")
    }
}

/// Launch-to-`main` latency of `spec.exec` under `spec.runner`, once per
/// repetition, with the combo's libraries staged in a private directory.
/// A few unrecorded warm-up launches precede the measured ones.
pub fn measure_init(spec: &TimingSpec<'_>) -> Result<TimingRow, BenchError> {
    Ok(measure_interleaved(std::slice::from_ref(spec))?.remove(0))
}

/// Like [`measure_init`] for several specs at once, alternating between
/// them on every repetition so slow drift on the host lands on all of them
/// alike. Rows come back in `specs` order.
pub fn measure_interleaved(specs: &[TimingSpec<'_>]) -> Result<Vec<TimingRow>, BenchError> {
    for spec in specs {
        if spec.reps < MIN_REPS {
            return Err(BenchError::TooFewReps {
                min: MIN_REPS,
                got: spec.reps,
            });
        }
    }
    let dirs = specs
        .iter()
        .map(|s| stage(s.combo))
        .collect::<Result<Vec<_>, _>>()?;
    let mut samples: Vec<Vec<f64>> = specs.iter().map(|s| Vec::with_capacity(s.reps)).collect();
    let rounds = specs.iter().map(|s| s.reps).max().unwrap_or(0);
    for i in 0..WARMUP + rounds {
        for ((spec, dir), out) in specs.iter().zip(&dirs).zip(&mut samples) {
            if i >= WARMUP + spec.reps {
                continue;
            }
            let us = launch(spec, dir.path())?;
            if i >= WARMUP {
                out.push(us);
            }
        }
    }
    Ok(specs
        .iter()
        .zip(samples)
        .map(|(spec, s)| TimingRow::from_samples(spec.variant, &spec.combo.label, spec.policy, s))
        .collect())
}

fn launch(spec: &TimingSpec<'_>, dir: &Path) -> Result<f64, BenchError> {
    let mut cmd = Command::new(spec.runner);
    cmd.arg("--path")
        .arg(dir)
        .arg(format!("--bind={}", spec.policy.as_str()))
        .arg(spec.exec)
        .env(PROBE_ENV, "1")
        .env_remove(LIBRARY_PATH_VAR)
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::piped());
    let start = monotonic_ns();
    let out = cmd.output().map_err(io_err(spec.runner))?;
    let stderr = String::from_utf8_lossy(&out.stderr);
    if !out.status.success() {
        return Err(BenchError::RunFailed {
            code: out.status.code().unwrap_or(-1),
            stderr: stderr.into_owned(),
        });
    }
    let probe = parse_probe(&stderr).ok_or(BenchError::NoProbe)?;
    Ok(probe.saturating_sub(start) as f64 / 1000.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probe_line_parsing() {
        assert_eq!(parse_probe("noise\nFAC_BENCH_PROBE 12345\n"), Some(12345));
        assert_eq!(parse_probe("FAC_BENCH_PROBE x"), None);
        assert_eq!(parse_probe(""), None);
    }

    #[test]
    fn median_and_mean() {
        let r = TimingRow::from_samples("FAC", "jpg", BindPolicy::Lazy, vec![4.0, 1.0, 3.0, 2.0]);
        assert_eq!((r.median_us, r.mean_us, r.reps), (2.5, 2.5, 4));
        let r = TimingRow::from_samples("FAC", "jpg", BindPolicy::Lazy, vec![9.0, 1.0, 2.0]);
        assert_eq!(r.median_us, 2.0);
    }

    #[test]
    fn csv_layout() {
        let r = TimingRow::from_samples("DYN", "none", BindPolicy::Eager, vec![1.0]);
        assert_eq!(
            TimingRow::to_csv(&[r]),
            "variant,combo,policy,reps,median_us,mean_us\nDYN,none,eager,1,1.000,1.000\n"
        );
    }

    #[test]
    fn clock_is_monotonic() {
        let a = monotonic_ns();
        let b = monotonic_ns();
        assert!(b >= a && a > 0);
    }

    #[test]
    fn too_few_reps_rejected() {
        let combo = Combo {
            label: "none".into(),
            libs: vec![],
            total_bytes: 0,
        };
        let spec = TimingSpec {
            runner: Path::new("facrun"),
            exec: Path::new("x.facx"),
            variant: "FAC",
            combo: &combo,
            policy: BindPolicy::Lazy,
            reps: 99,
        };
        assert!(matches!(
            measure_init(&spec),
            Err(BenchError::TooFewReps { min: 100, got: 99 })
        ));
    }
}
