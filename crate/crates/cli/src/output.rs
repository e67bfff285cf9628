//! CSV files with a provenance comment line.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use crate::config::RunConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn comment_line(cfg: &RunConfig) -> String {
    format!("# config_hash={} version={VERSION}", cfg.hash())
}

/// Shortest round-trip decimal, switching to exponent form for very small
/// or large magnitudes.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Time on the step grid, rounded to 12 decimals so `k·dt` prints cleanly.
pub fn time(t: f64) -> String {
    num((t * 1e12).round() / 1e12)
}

/// Angle in degrees, rounded to 9 decimals to hide radian round trips.
pub fn deg(x: f64) -> String {
    num((x * 1e9).round() / 1e9)
}

pub struct Csv {
    path: PathBuf,
    w: BufWriter<File>,
}

impl Csv {
    pub fn create(path: &Path, comment: &str, header: &str) -> Result<Self> {
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(f);
        writeln!(w, "{comment}")?;
        writeln!(w, "{header}")?;
        Ok(Self { path: path.to_path_buf(), w })
    }

    /// Reopens an existing file for appending after dropping every data row
    /// whose leading time column exceeds `t_keep`. The comment and header
    /// must match.
    pub fn resume(path: &Path, comment: &str, header: &str, t_keep: f64) -> Result<Self> {
        let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let mut kept = Vec::new();
        for (k, line) in BufReader::new(f).lines().enumerate() {
            let line = line?;
            match k {
                0 if line != comment => anyhow::bail!("{}: written by a different configuration", path.display()),
                1 if line != header => anyhow::bail!("{}: unexpected header", path.display()),
                0 | 1 => kept.push(line),
                _ => {
                    let t: f64 = line
                        .split(',')
                        .next()
                        .and_then(|s| s.parse().ok())
                        .with_context(|| format!("{}: malformed row {line:?}", path.display()))?;
                    if t <= t_keep + 1e-9 {
                        kept.push(line);
                    }
                }
            }
        }
        let mut text = kept.join("\n");
        text.push('\n');
        std::fs::write(path, text)?;
        let f = OpenOptions::new().append(true).open(path)?;
        Ok(Self { path: path.to_path_buf(), w: BufWriter::new(f) })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<()> {
        writeln!(self.w, "{}", fields.join(","))?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.w.flush().with_context(|| format!("writing {}", self.path.display()))
    }
}
