//! `cqad` command-line front end: reads a TOML configuration, runs one
//! experiment (or a parameter scan of it) and writes data, a summary and a
//! run manifest into the output directory.

mod config;
mod output;
mod run;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use config::{apply_override, from_table, parse_document, Invalid};
use output::{write_json, write_table, Format, RunManifest};
use run::{run_experiment, Artifact, Table, EXPERIMENTS};

#[derive(Parser, Debug)]
#[command(name = "cqad", version, about = "Simulate and analyse qubit–mechanics experiments")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// `key.path=value`, value parsed as a TOML literal or taken as a string.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Data file format (overrides `output.format`).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Vacuum Rabi oscillation between qubit and a mode.
    Rabi,
    /// Mechanical energy decay.
    Lifetime,
    /// Ramsey, echo or CP sequence on a mode.
    Coherence,
    /// Rabi population measurement thermometry.
    Thermometry,
    /// Phonon decay read out through the ac-Stark shift.
    Stark,
    /// Steady-state qubit spectroscopy.
    Spectroscopy,
    /// Fock-state preparation and Wigner tomography.
    Tomography,
    /// Fluctuator noise Monte Carlo against the closed forms.
    Noise,
    /// Equivalent circuit and cooperativities.
    Circuit,
    /// Fit a model to two columns of a CSV file.
    Fit,
    /// Run an experiment on a grid of configuration values.
    Scan {
        experiment: String,
        /// `key.path=start:stop:count`; repeat for a grid (first axis slowest).
        #[arg(long = "axis", required = true)]
        axes: Vec<String>,
    },
}

impl Command {
    fn name(&self) -> &str {
        match self {
            Command::Rabi => "rabi",
            Command::Lifetime => "lifetime",
            Command::Coherence => "coherence",
            Command::Thermometry => "thermometry",
            Command::Stark => "stark",
            Command::Spectroscopy => "spectroscopy",
            Command::Tomography => "tomography",
            Command::Noise => "noise",
            Command::Circuit => "circuit",
            Command::Fit => "fit",
            Command::Scan { .. } => "scan",
        }
    }
}

/// Configuration after overrides, plus the resolved run settings.
struct Setup {
    doc: toml::Table,
    seed: u64,
    out: PathBuf,
    format: Format,
    hash: String,
}

fn setup(cli: &Cli) -> Result<Setup> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Invalid("--config is required".into()))?;
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut doc = parse_document(&text)?;
    for o in &cli.overrides {
        apply_override(&mut doc, o)?;
    }
    if let Some(s) = cli.seed {
        let s = i64::try_from(s).map_err(|_| Invalid("--seed must fit in a signed 64-bit integer".into()))?;
        doc.insert("seed".into(), toml::Value::Integer(s));
    }
    // Validate the whole document up front, including unknown keys.
    let cfg = from_table(&doc)?;
    let format = match (cli.format, cfg.output.format.as_deref()) {
        (Some(f), _) => f,
        (None, None) => Format::Csv,
        (None, Some(s)) => {
            Format::parse(s).ok_or_else(|| Invalid(format!("`output.format`: expected csv or json, got `{s}`")))?
        }
    };
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let canonical = toml::to_string(&doc)?;
    let hash = Sha256::digest(canonical.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    Ok(Setup {
        seed: cfg.seed.unwrap_or(0),
        doc,
        out,
        format,
        hash,
    })
}

fn point_seed(master: u64, index: usize) -> u64 {
    cqad::seed::derive(master, index as u64)
}

fn run_single(name: &str, s: &Setup) -> Result<Vec<PathBuf>> {
    let cfg = from_table(&s.doc)?;
    // A run is the single point of a scan, so it takes that point's seed.
    let seed = point_seed(s.seed, 0);
    let art = run_experiment(name, &cfg, seed)?;
    let data = write_table(&s.out, name, &art.table, s.format)?;
    let summary_path = s.out.join(format!("{name}_summary.json"));
    let mut summary = serde_json::Map::from_iter(art.summary.clone());
    summary.insert("seed".into(), json!(seed));
    write_json(&summary_path, &Value::Object(summary))?;
    Ok(vec![data, summary_path])
}

struct AxisSpec {
    key: String,
    values: Vec<toml::Value>,
    numbers: Vec<f64>,
}

fn parse_axis(spec: &str) -> Result<AxisSpec> {
    let bad = || Invalid(format!("axis `{spec}` is not key=start:stop:count"));
    let (key, range) = spec.split_once('=').ok_or_else(bad)?;
    let parts: Vec<&str> = range.split(':').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(bad().into());
    }
    let count: usize = parts[2].parse().map_err(|_| bad())?;
    let (a, b): (f64, f64) = (
        parts[0].parse().map_err(|_| bad())?,
        parts[1].parse().map_err(|_| bad())?,
    );
    if count == 0 || !a.is_finite() || !b.is_finite() {
        return Err(Invalid(format!("axis `{spec}`: need finite bounds and count >= 1")).into());
    }
    let numbers: Vec<f64> = if count == 1 {
        vec![a]
    } else {
        (0..count)
            .map(|k| a + (b - a) * k as f64 / (count - 1) as f64)
            .collect()
    };
    // Integer bounds on an integral grid stay integers so count-like keys work.
    let integral =
        parts[0].parse::<i64>().is_ok() && parts[1].parse::<i64>().is_ok() && numbers.iter().all(|v| v.fract() == 0.0);
    let values = numbers
        .iter()
        .map(|&v| {
            if integral {
                toml::Value::Integer(v as i64)
            } else {
                toml::Value::Float(v)
            }
        })
        .collect();
    Ok(AxisSpec {
        key: key.trim().to_string(),
        values,
        numbers,
    })
}

fn run_scan(experiment: &str, axis_specs: &[String], s: &Setup) -> Result<Vec<PathBuf>> {
    if !EXPERIMENTS.contains(&experiment) {
        return Err(Invalid(format!(
            "scan: unknown experiment `{experiment}` (one of {})",
            EXPERIMENTS.join(", ")
        ))
        .into());
    }
    let axes = axis_specs.iter().map(|a| parse_axis(a)).collect::<Result<Vec<_>>>()?;
    let n: usize = axes.iter().map(|a| a.values.len()).product();
    let coords = |mut i: usize| {
        let mut idx = vec![0; axes.len()];
        for (k, a) in axes.iter().enumerate().rev() {
            idx[k] = i % a.values.len();
            i /= a.values.len();
        }
        idx
    };
    // Every point is validated before any work starts.
    let configs = (0..n)
        .map(|i| {
            let mut doc = s.doc.clone();
            for (a, &j) in axes.iter().zip(&coords(i)) {
                apply_override(&mut doc, &format!("{}={}", a.key, a.values[j]))?;
            }
            Ok(from_table(&doc)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let results: Vec<Result<Artifact>> = configs
        .par_iter()
        .enumerate()
        .map(|(i, cfg)| run_experiment(experiment, cfg, point_seed(s.seed, i)))
        .collect();
    let metrics: BTreeSet<String> = results
        .iter()
        .filter_map(|r| r.as_ref().ok())
        .flat_map(|a| a.metrics().into_keys())
        .collect();
    let seeds: Vec<u64> = (0..n).map(|i| point_seed(s.seed, i)).collect();
    let mut table = Table {
        columns: axes.iter().map(|a| a.key.clone()).collect(),
        rows: Vec::with_capacity(n),
        seeds: Some(seeds.clone()),
    };
    table.columns.extend(metrics.iter().cloned());
    table.columns.push("valid".into());
    let mut errors = Vec::new();
    for (i, r) in results.iter().enumerate() {
        let mut row: Vec<f64> = axes.iter().zip(&coords(i)).map(|(a, &j)| a.numbers[j]).collect();
        match r {
            Ok(art) => {
                let m = art.metrics();
                row.extend(metrics.iter().map(|k| m.get(k).copied().unwrap_or(f64::NAN)));
                row.push(1.0);
            }
            Err(e) => {
                row.extend(metrics.iter().map(|_| f64::NAN));
                row.push(0.0);
                errors.push(json!({"point": i, "error": format!("{e:#}")}));
            }
        }
        table.rows.push(row);
    }
    let valid = errors.is_empty();
    let stem = if valid {
        format!("scan_{experiment}")
    } else {
        format!("scan_{experiment}.partial")
    };
    let data = write_table(&s.out, &stem, &table, s.format)?;
    let summary_path = s.out.join(format!("{stem}_summary.json"));
    write_json(
        &summary_path,
        &json!({"experiment": experiment, "points": n, "valid": valid, "seeds": seeds, "errors": errors}),
    )?;
    if !valid {
        let first = results.into_iter().find_map(|r| r.err()).expect("an error");
        return Err(first.context(format!(
            "scan aborted: {} of {n} points failed; partial results in {}",
            errors.len(),
            data.display()
        )));
    }
    Ok(vec![data, summary_path])
}

fn execute(cli: &Cli) -> Result<()> {
    let start = Instant::now();
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(Invalid("--workers must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| anyhow!("worker pool: {e}"))?;
    }
    let s = setup(cli)?;
    std::fs::create_dir_all(&s.out).with_context(|| format!("creating {}", s.out.display()))?;
    let outputs = match &cli.command {
        Command::Scan { experiment, axes } => run_scan(experiment, axes, &s)?,
        c => run_single(c.name(), &s)?,
    };
    let config_path = s.out.join("effective_config.toml");
    output::write_atomic(&config_path, toml::to_string(&s.doc)?.as_bytes())?;
    let manifest = RunManifest {
        tool: "cqad",
        version: env!("CARGO_PKG_VERSION"),
        command: match &cli.command {
            Command::Scan { experiment, .. } => format!("scan {experiment}"),
            c => c.name().to_string(),
        },
        config_sha256: s.hash.clone(),
        seed: s.seed,
        workers: rayon::current_num_threads(),
        outputs: outputs
            .iter()
            .chain(std::iter::once(&config_path))
            .map(|p| file_name(p))
            .collect(),
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    write_json(&s.out.join("manifest.json"), &manifest)?;
    for p in &outputs {
        println!("{}", p.display());
    }
    Ok(())
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Configuration and input problems exit with 2, everything else with 1.
fn is_validation(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<Invalid>().is_some()
            || matches!(
                c.downcast_ref::<cqad::Error>(),
                Some(cqad::Error::InvalidSpec { .. } | cqad::Error::InvalidInput(_) | cqad::Error::UnknownLabel(_))
            )
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_validation(&e) { 2 } else { 1 })
        }
    }
}
