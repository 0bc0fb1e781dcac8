//! Run directory, checks and manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use nalgebra::DMatrix;
use qortho::image::GrayImage;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunFile;

/// Shortest representation that parses back to the same double.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Human-readable acceptance rule, e.g. `< 1e-8`.
    pub rule: String,
    pub pass: bool,
}

impl Check {
    pub fn below(name: &str, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, rule: format!("< {limit:e}"), pass: value < limit }
    }

    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, rule: format!("<= {limit}"), pass: value <= limit }
    }

    pub fn within(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Check { name: name.into(), value, rule: format!("in [{lo}, {hi}]"), pass: (lo..=hi).contains(&value) }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OutputFile {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Serialize)]
pub struct RunManifest<'a> {
    pub command: &'a str,
    pub version: String,
    pub argv: Vec<String>,
    pub config: &'a RunFile,
    pub seeds: serde_json::Value,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub checks: &'a [Check],
    pub passed: bool,
    pub outputs: &'a [OutputFile],
}

pub fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

pub struct RunDir {
    pub root: PathBuf,
    pub outputs: Vec<OutputFile>,
}

impl RunDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).with_context(|| format!("cannot create output directory {}", root.display()))?;
        Ok(RunDir { root: root.to_path_buf(), outputs: Vec::new() })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.root.join(name);
        std::fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        let digest = Sha256::digest(bytes);
        let mut sha256 = String::with_capacity(64);
        for b in digest {
            write!(sha256, "{b:02x}").unwrap();
        }
        self.outputs.retain(|o| o.path != name);
        self.outputs.push(OutputFile { path: name.into(), bytes: bytes.len(), sha256 });
        Ok(path)
    }

    pub fn text(&mut self, name: &str, s: &str) -> Result<PathBuf> {
        self.write(name, s.as_bytes())
    }

    pub fn csv<I, R>(&mut self, name: &str, header: &[&str], rows: I) -> Result<PathBuf>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("csv buffer: {e}"))?;
        self.write(name, &bytes)
    }

    /// Dense matrix with the level energies as the first column.
    pub fn matrix_csv(&mut self, name: &str, energies: &[f64], m: &DMatrix<f64>, unit: &str) -> Result<PathBuf> {
        let mut header = vec!["i".to_string(), "E_i [L^-2]".to_string()];
        header.extend((0..m.ncols()).map(|j| format!("j{j} [{unit}]")));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let rows = (0..m.nrows()).map(|i| {
            let mut r = vec![i.to_string(), num(energies[i])];
            r.extend((0..m.ncols()).map(|j| num(m[(i, j)])));
            r
        });
        self.csv(name, &header, rows)
    }

    pub fn pgm(&mut self, name: &str, img: &GrayImage) -> Result<PathBuf> {
        self.write(name, &img.to_pgm())
    }
}

/// Plain-text block listing the checks.
pub fn render_checks(checks: &[Check]) -> String {
    let mut s = String::new();
    for c in checks {
        let _ = writeln!(s, "{} {}: {:e} ({})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.rule);
    }
    s
}
