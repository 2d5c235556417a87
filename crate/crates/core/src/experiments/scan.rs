//! Gridded results with per-point seeds.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{seed, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    /// Column name including its unit suffix, e.g. `delay_s`.
    pub name: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            values,
        }
    }

    pub fn linspace(name: impl Into<String>, start: f64, stop: f64, n: usize) -> Self {
        let values = match n {
            0 => Vec::new(),
            1 => vec![start],
            _ => (0..n)
                .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
                .collect(),
        };
        Self::new(name, values)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub axes: Vec<Axis>,
    pub value_name: String,
    /// Row-major over the axes, last axis fastest.
    pub values: Vec<f64>,
    /// Further per-point series sharing the grid.
    pub columns: Vec<(String, Vec<f64>)>,
    pub seed_map: Vec<u64>,
}

impl ScanResult {
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if self.values.len() != n || self.seed_map.len() != n || self.columns.iter().any(|(_, c)| c.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.values.len(),
            });
        }
        Ok(())
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        if name == self.value_name {
            return Ok(&self.values);
        }
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c.as_slice())
            .ok_or_else(|| Error::UnknownLabel(name.to_string()))
    }

    /// Axis coordinates of flat point `i`.
    pub fn coords(&self, mut i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.axes.len()];
        for (k, a) in self.axes.iter().enumerate().rev() {
            let n = a.values.len();
            out[k] = a.values[i % n];
            i /= n;
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut head: Vec<&str> = self.axes.iter().map(|a| a.name.as_str()).collect();
        head.push(&self.value_name);
        head.extend(self.columns.iter().map(|(n, _)| n.as_str()));
        head.push("seed");
        writeln!(w, "{}", head.join(","))?;
        for i in 0..self.len() {
            let mut row: Vec<String> = self.coords(i).iter().map(|v| format!("{v:e}")).collect();
            row.push(format!("{:e}", self.values[i]));
            row.extend(self.columns.iter().map(|(_, c)| format!("{:e}", c[i])));
            row.push(self.seed_map[i].to_string());
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii csv")
    }
}

/// Evaluates `f(coords, seed)` on every grid point in parallel. `f` returns
/// the primary value followed by one value per extra column. Each point's
/// seed is derived from the master seed and its flat index, and results are
/// gathered in index order, so the output is independent of scheduling.
pub fn scan<F>(axes: Vec<Axis>, value_name: &str, extra: &[&str], master_seed: u64, f: F) -> Result<ScanResult>
where
    F: Fn(&[f64], u64) -> Result<Vec<f64>> + Sync,
{
    let mut res = ScanResult {
        axes,
        value_name: value_name.to_string(),
        values: Vec::new(),
        columns: extra.iter().map(|n| (n.to_string(), Vec::new())).collect(),
        seed_map: Vec::new(),
    };
    let n = res.len();
    res.seed_map = (0..n).map(|i| seed::derive(master_seed, i as u64)).collect();
    let rows = (0..n)
        .into_par_iter()
        .map(|i| {
            let row = f(&res.coords(i), res.seed_map[i])?;
            if row.len() != extra.len() + 1 {
                return Err(Error::DimensionMismatch {
                    expected: extra.len() + 1,
                    got: row.len(),
                });
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    for row in rows {
        res.values.push(row[0]);
        for (c, v) in res.columns.iter_mut().zip(&row[1..]) {
            c.1.push(*v);
        }
    }
    Ok(res)
}
