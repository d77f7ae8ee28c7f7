use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::Context;
use crate::error::CliError;
use crate::TOOL_VERSION;

pub const SIGNIFICANT_DIGITS: usize = 12;

/// `%.12g`: shortest of fixed and scientific at 12 significant digits,
/// trailing zeros dropped.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIGNIFICANT_DIGITS as i32).contains(&exp) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Inclusive grid `start, start+step, …, ≤ stop`, each value rounded to 12
/// significant digits so `0.1 + 2·0.1` prints and compares as `0.3`.
pub fn grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) || step <= 0.0 || stop < start {
        return Err(CliError::Usage(format!(
            "grid needs finite start <= stop and step > 0, got [{start}, {stop}] step {step}"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| fmt_sig(start + i as f64 * step).parse().expect("round trip"))
        .collect())
}

/// One named pass/fail comparison carried in the metadata.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `value <= bound`.
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            value,
            bound,
            passed: value <= bound,
        }
    }

    /// Passes when `value >= bound`.
    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            value,
            bound,
            passed: value >= bound,
        }
    }

    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        let name = name.into();
        Check {
            name: format!("{name} in [{lo}, {hi}]"),
            value,
            bound: if value < lo { lo } else { hi },
            passed: (lo..=hi).contains(&value),
        }
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

/// What a subcommand reports back to `main`.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub passed: bool,
    pub checks: Vec<Check>,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        if self.passed {
            0
        } else {
            1
        }
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

#[derive(Serialize)]
struct Metadata<'a, P: Serialize, R: Serialize> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'a str,
    seed: u64,
    cutoff_override: Option<usize>,
    threads: usize,
    config_file: Option<&'a Path>,
    params: &'a P,
    results: &'a R,
    checks: &'a [Check],
    passed: bool,
}

/// `<out>.json`, next to a CSV.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    File::create(path).map(BufWriter::new).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_json<P: Serialize, R: Serialize>(
    path: &Path,
    subcommand: &str,
    ctx: &Context,
    params: &P,
    results: &R,
    checks: &[Check],
) -> Result<(), CliError> {
    let meta = Metadata {
        tool: "tqpsim",
        version: TOOL_VERSION,
        subcommand,
        seed: ctx.seed,
        cutoff_override: ctx.cutoff,
        threads: ctx.threads,
        config_file: ctx.config_file.as_deref(),
        params,
        results,
        checks,
        passed: all_passed(checks),
    };
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, &meta)?;
    writeln!(w).and_then(|_| w.flush()).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush().map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig(0.1 + 0.2), "0.3");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(-2.5), "-2.5");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_sig(123456.7890123456), "123456.789012");
        assert_eq!(fmt_sig(1.5e-7), "1.5e-07");
        assert_eq!(fmt_sig(6.02214076e23), "6.02214076e+23");
        assert_eq!(fmt_sig(1e-5), "0.00001");
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(f64::NAN), "nan");
    }

    #[test]
    fn twelve_digits_round_trip() {
        for x in [std::f64::consts::PI, 0.997981234567891, 1.0 / 7.0, 2.0f64.sqrt() * 1e-9] {
            let back: f64 = fmt_sig(x).parse().unwrap();
            assert!(((back - x) / x).abs() < 1e-11, "{x}");
        }
    }

    #[test]
    fn grid_counts() {
        let g = grid(0.1, 2.0, 0.1).unwrap();
        assert_eq!(g.len(), 20);
        assert_eq!(g[2], 0.3);
        assert_eq!(*g.last().unwrap(), 2.0);
        assert_eq!(grid(0.2, 4.0, 0.2).unwrap().len(), 20);
        assert_eq!(grid(1.0, 1.0, 0.5).unwrap(), vec![1.0]);
        assert!(grid(1.0, 0.5, 0.1).is_err());
        assert!(grid(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn sidecar_appends() {
        assert_eq!(sidecar_path(Path::new("out/a.csv")), PathBuf::from("out/a.csv.json"));
    }

    #[test]
    fn checks() {
        assert!(Check::at_most("a", 1.0, 1.0).passed);
        assert!(!Check::at_least("a", 0.5, 1.0).passed);
        assert!(Check::within("r", 0.8, 0.7, 0.9).passed);
        assert!(!Check::within("r", 0.95, 0.7, 0.9).passed);
    }
}
