//! Artifact writers. Every file goes through a temporary sibling and a
//! rename, so readers never see a half-written result.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{Map, Value};

use crate::run::Table;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            _ => None,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
    f.write_all(bytes)?;
    f.sync_all()?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

fn number(v: f64) -> String {
    // `{:e}` round-trips and never depends on locale.
    format!("{v:e}")
}

pub fn table_csv(t: &Table) -> String {
    let mut out = t.columns.join(",");
    if t.seeds.is_some() {
        out.push_str(",seed");
    }
    out.push('\n');
    for (i, r) in t.rows.iter().enumerate() {
        let mut cells: Vec<String> = r.iter().map(|v| number(*v)).collect();
        if let Some(s) = &t.seeds {
            cells.push(s[i].to_string());
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Column-major JSON; non-finite values become null.
pub fn table_json(t: &Table) -> String {
    let mut cols = Map::new();
    for (j, name) in t.columns.iter().enumerate() {
        let v: Vec<Value> = t
            .rows
            .iter()
            .map(|r| {
                serde_json::Number::from_f64(r[j])
                    .map(Value::Number)
                    .unwrap_or(Value::Null)
            })
            .collect();
        cols.insert(name.clone(), Value::Array(v));
    }
    if let Some(s) = &t.seeds {
        cols.insert("seed".into(), serde_json::json!(s));
    }
    let mut s = serde_json::to_string_pretty(&Value::Object(cols)).expect("json");
    s.push('\n');
    s
}

pub fn write_table(dir: &Path, stem: &str, t: &Table, format: Format) -> Result<PathBuf> {
    let path = dir.join(format!("{stem}.{}", format.extension()));
    let body = match format {
        Format::Csv => table_csv(t),
        Format::Json => table_json(t),
    };
    write_atomic(&path, body.as_bytes())?;
    Ok(path)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub workers: usize,
    pub outputs: Vec<String>,
    pub wall_time_s: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_json_agree() {
        let t = Table {
            columns: vec!["time_s".into(), "p_e".into()],
            rows: vec![vec![0.0, 1.0], vec![1e-6, f64::NAN]],
            seeds: Some(vec![u64::MAX, 3]),
        };
        assert_eq!(
            table_csv(&t),
            "time_s,p_e,seed\n0e0,1e0,18446744073709551615\n1e-6,NaN,3\n"
        );
        let v: Value = serde_json::from_str(&table_json(&t)).unwrap();
        assert_eq!(v["time_s"][1].as_f64(), Some(1e-6));
        assert!(v["p_e"][1].is_null());
        assert_eq!(v["seed"][0].as_u64(), Some(u64::MAX));
    }

    #[test]
    fn atomic_write_leaves_no_temporary() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.json");
        write_atomic(&p, b"{}").unwrap();
        let names: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        assert_eq!(names.len(), 1);
        assert_eq!(fs::read(&p).unwrap(), b"{}");
    }
}
