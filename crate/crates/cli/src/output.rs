//! Report files. Every file opens with a header naming the command, the
//! config hash and the seed; nothing time-dependent is written.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use linsel_core::TraceEvent;
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Header {
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub version: &'static str,
}

impl Header {
    pub fn new(command: &str, config_sha256: String, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            config_sha256,
            seed,
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

/// Round-trip exact: 17 significant digits.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn opt_int<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Comma-separated table prefixed by `# key=value` header lines.
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, header: &Header) -> String {
        let mut s = String::new();
        writeln!(s, "# command={}", header.command).unwrap();
        writeln!(s, "# config_sha256={}", header.config_sha256).unwrap();
        writeln!(s, "# seed={}", header.seed).unwrap();
        writeln!(s, "# version={}", header.version).unwrap();
        writeln!(s, "{}", self.columns.join(",")).unwrap();
        for row in &self.rows {
            writeln!(s, "{}", row.join(",")).unwrap();
        }
        s
    }
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    header: &'a Header,
    report: &'a T,
}

pub fn render_json<T: Serialize>(header: &Header, report: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&Document { header, report })?;
    s.push('\n');
    Ok(s)
}

#[derive(Serialize)]
struct TraceLine<'a> {
    trial: u64,
    #[serde(flatten)]
    event: &'a TraceEvent,
}

pub fn render_trace<'a>(
    header: &Header,
    trials: impl IntoIterator<Item = (u64, &'a [TraceEvent])>,
) -> Result<String> {
    let mut s = serde_json::to_string(header)?;
    s.push('\n');
    for (trial, events) in trials {
        for event in events {
            s.push_str(&serde_json::to_string(&TraceLine { trial, event })?);
            s.push('\n');
        }
    }
    Ok(s)
}

/// Destination for a command's files: a directory, or stdout for the JSON
/// report alone.
pub enum Sink {
    Dir(PathBuf),
    Stdout,
}

impl Sink {
    pub fn new(out: Option<&Path>) -> Result<Self> {
        match out {
            Some(dir) => {
                fs::create_dir_all(dir)
                    .with_context(|| format!("creating output directory {}", dir.display()))?;
                Ok(Sink::Dir(dir.to_path_buf()))
            }
            None => Ok(Sink::Stdout),
        }
    }

    /// Writes `<stem>.json` and, with a table, `<stem>.csv`.
    pub fn report<T: Serialize>(
        &self,
        stem: &str,
        header: &Header,
        report: &T,
        table: Option<&Table>,
    ) -> Result<()> {
        let json = render_json(header, report)?;
        match self {
            Sink::Stdout => {
                std::io::stdout().write_all(json.as_bytes())?;
            }
            Sink::Dir(dir) => {
                write_file(&dir.join(format!("{stem}.json")), &json)?;
                if let Some(t) = table {
                    write_file(&dir.join(format!("{stem}.csv")), &t.render(header))?;
                }
            }
        }
        Ok(())
    }

    /// Writes `trace.jsonl`; ignored on stdout.
    pub fn trace(&self, text: &str) -> Result<()> {
        if let Sink::Dir(dir) = self {
            write_file(&dir.join("trace.jsonl"), text)?;
        }
        Ok(())
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 6.0, 1e-300, -2.5e17] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(f64::INFINITY), "inf");
        assert_eq!(opt_num(None), "");
    }

    #[test]
    fn tables_carry_the_header() {
        let h = Header::new("run", "ab".into(), 7);
        let mut t = Table::new(vec!["a", "b"]);
        t.push(vec!["1".into(), num(0.5)]);
        let s = t.render(&h);
        assert!(s.starts_with("# command=run\n# config_sha256=ab\n# seed=7\n"));
        assert!(s.ends_with("a,b\n1,5.0000000000000000e-1\n"));
    }
}
