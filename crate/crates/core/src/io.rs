//! Plain-text signal ingest and CSV output.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Read one value per line from the first comma-separated field. A
/// non-numeric first line is treated as a header; blank lines are skipped.
pub fn parse_signal(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let field = line.split(',').next().unwrap_or("").trim();
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            Ok(v) => {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("non-finite value `{v}`"),
                })
            }
            Err(_) if idx == 0 => {}
            Err(_) => {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("`{field}` is not a number"),
                })
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Input("no samples found".into()));
    }
    Ok(out)
}

/// Read a signal from a file, or from stdin when the path is `-`.
pub fn read_signal(path: &Path) -> Result<Vec<f64>> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let text = if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(io_err)?;
        s
    } else {
        fs::read_to_string(path).map_err(io_err)?
    };
    parse_signal(&text)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Format a float with 17 significant digits, enough to round-trip.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV with a header row and one row per element of `columns[..][i]`.
pub fn columns_csv(header: &[&str], columns: &[&[f64]]) -> String {
    let rows = columns.first().map_or(0, |c| c.len());
    let mut out = header.join(",");
    out.push('\n');
    for i in 0..rows {
        let row: Vec<String> = columns.iter().map(|c| fmt_f64(c[i])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// `<path>.report.json`
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".report.json");
    PathBuf::from(s)
}

/// How to bring a non-dyadic signal to a power-of-two length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PadPolicy {
    /// Symmetric reflection up to the next power of two; output is cut back.
    Reflect,
    /// Keep the longest dyadic prefix.
    Truncate,
}

impl std::str::FromStr for PadPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reflect" => Ok(PadPolicy::Reflect),
            "truncate" => Ok(PadPolicy::Truncate),
            other => Err(Error::config(format!(
                "unknown pad policy `{other}` (reflect|truncate)"
            ))),
        }
    }
}

/// Apply the pad policy. Dyadic input is returned unchanged.
pub fn pad(y: &[f64], policy: PadPolicy) -> Result<Vec<f64>> {
    let n = y.len();
    if n < 2 {
        return Err(Error::NonDyadic { len: n });
    }
    if n.is_power_of_two() {
        return Ok(y.to_vec());
    }
    Ok(match policy {
        PadPolicy::Truncate => y[..1 << n.ilog2()].to_vec(),
        PadPolicy::Reflect => {
            let target = n.next_power_of_two();
            // whole-sample symmetric extension: ..., y[n-2], y[n-1] | y[n-1], y[n-2], ...
            let period = 2 * n;
            (0..target)
                .map(|i| {
                    let k = i % period;
                    if k < n {
                        y[k]
                    } else {
                        y[period - 1 - k]
                    }
                })
                .collect()
        }
    })
}
