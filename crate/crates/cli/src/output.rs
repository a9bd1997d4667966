//! JSON, CSV, manifest and gnuplot output.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{Format, RunConfig};
use crate::report::Report;
use crate::CliError;

/// A CSV table, either as cells or as text already rendered by the library.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    content: Content,
}

#[derive(Debug, Clone)]
enum Content {
    Cells { header: Vec<String>, rows: Vec<Vec<String>> },
    Raw(String),
}

impl Table {
    pub fn new(name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Self {
        Self::from_strings(name, header.iter().map(|h| h.to_string()).collect(), rows)
    }

    pub fn from_strings(name: &str, header: Vec<String>, rows: Vec<Vec<String>>) -> Self {
        Self {
            name: name.into(),
            content: Content::Cells { header, rows },
        }
    }

    pub fn raw_csv(name: &str, csv: String) -> Self {
        Self {
            name: name.into(),
            content: Content::Raw(csv),
        }
    }

    fn render(&self) -> Result<Vec<u8>, CliError> {
        match &self.content {
            Content::Raw(s) => Ok(s.clone().into_bytes()),
            Content::Cells { header, rows } => {
                let mut w = csv::WriterBuilder::new()
                    .terminator(csv::Terminator::CRLF)
                    .from_writer(Vec::new());
                w.write_record(header).map_err(io)?;
                for r in rows {
                    w.write_record(r).map_err(io)?;
                }
                w.into_inner().map_err(|e| CliError::Io(e.to_string()))
            }
        }
    }

    fn columns(&self) -> usize {
        match &self.content {
            Content::Cells { header, .. } => header.len(),
            Content::Raw(s) => s.lines().next().map_or(0, |l| l.split(',').count()),
        }
    }
}

fn io(e: impl std::fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    subcommand: &'a str,
    version: &'a str,
    seed: u64,
    config_sha256: String,
    files: Vec<FileEntry>,
}

#[derive(Debug, Serialize)]
struct FileEntry {
    name: String,
    sha256: String,
    bytes: usize,
}

fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes `<cmd>.json`, `<cmd>_<table>.csv`, optionally `<cmd>.gp`, and
/// `<cmd>.manifest.json` with the SHA-256 of each.
pub fn write_outputs(
    cfg: &RunConfig,
    config_text: &str,
    report: &Report,
    tables: &[Table],
    plots: bool,
) -> Result<Vec<PathBuf>, CliError> {
    let dir = Path::new(&cfg.output.directory);
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let cmd = report.subcommand.as_str();
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    if cfg.output.formats.contains(&Format::Json) {
        let mut json = serde_json::to_vec_pretty(report).map_err(io)?;
        json.push(b'\n');
        files.push((format!("{cmd}.json"), json));
    }
    if cfg.output.formats.contains(&Format::Csv) {
        for t in tables {
            files.push((format!("{cmd}_{}.csv", t.name), t.render()?));
        }
        if plots && !tables.is_empty() {
            files.push((format!("{cmd}.gp"), gnuplot(cmd, tables).into_bytes()));
        }
    }
    let mut entries = Vec::new();
    let mut paths = Vec::new();
    for (name, bytes) in &files {
        let p = dir.join(name);
        fs::write(&p, bytes).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
        entries.push(FileEntry {
            name: name.clone(),
            sha256: hex_digest(bytes),
            bytes: bytes.len(),
        });
        paths.push(p);
    }
    let manifest = Manifest {
        subcommand: cmd,
        version: &report.version,
        seed: report.seed,
        config_sha256: hex_digest(config_text.as_bytes()),
        files: entries,
    };
    let p = dir.join(format!("{cmd}.manifest.json"));
    let mut m = serde_json::to_vec_pretty(&manifest).map_err(io)?;
    m.push(b'\n');
    fs::write(&p, m).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
    paths.push(p);
    Ok(paths)
}

/// One PNG per table, every column against the first.
fn gnuplot(cmd: &str, tables: &[Table]) -> String {
    let mut s = String::from("set datafile separator ','\nset key autotitle columnhead\nset terminal pngcairo size 900,600\n");
    for t in tables {
        let n = t.columns();
        if n < 2 {
            continue;
        }
        s.push_str(&format!(
            "\nset output '{cmd}_{name}.png'\nset title '{cmd} {name}'\nplot for [i=2:{n}] '{cmd}_{name}.csv' using 1:i with linespoints\n",
            name = t.name
        ));
    }
    s
}
