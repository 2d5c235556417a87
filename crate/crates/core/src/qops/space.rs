use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Ordered tensor-product structure. Factor order is declaration order;
/// the first factor is the outermost (slowest-varying) index.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositeSpace {
    dims: Vec<usize>,
    labels: Vec<String>,
}

impl CompositeSpace {
    pub const DEFAULT_CAP: usize = 4096;

    pub fn new<S: Into<String>>(factors: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        Self::with_cap(factors, Self::DEFAULT_CAP)
    }

    pub fn with_cap<S: Into<String>>(factors: impl IntoIterator<Item = (S, usize)>, cap: usize) -> Result<Self> {
        let mut dims = Vec::new();
        let mut labels: Vec<String> = Vec::new();
        for (label, dim) in factors {
            let label = label.into();
            if dim < 2 {
                return Err(Error::InvalidDimension(format!(
                    "factor `{label}` has dimension {dim}, need at least 2"
                )));
            }
            if labels.contains(&label) {
                return Err(Error::InvalidDimension(format!("duplicate label `{label}`")));
            }
            labels.push(label);
            dims.push(dim);
        }
        if dims.is_empty() {
            return Err(Error::InvalidDimension("space has no factors".into()));
        }
        let total = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .unwrap_or(usize::MAX);
        if total > cap {
            return Err(Error::InvalidDimension(format!(
                "total dimension {total} exceeds cap {cap}"
            )));
        }
        Ok(Self { dims, labels })
    }

    /// Single-factor space, used for local operators.
    pub fn single(label: &str, dim: usize) -> Result<Self> {
        Self::new([(label, dim)])
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.dims[self.index_of(label)?])
    }

    pub fn contains(&self, label: &str) -> bool {
        self.labels.iter().any(|l| l == label)
    }

    /// Row-major strides of each factor in the flat basis index.
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dims.len()];
        for k in (0..self.dims.len().saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.dims[k + 1];
        }
        s
    }

    /// Flat basis index of a product basis state given per-factor levels.
    pub fn flat_index(&self, levels: &[usize]) -> Result<usize> {
        if levels.len() != self.dims.len() {
            return Err(Error::DimensionMismatch {
                expected: self.dims.len(),
                got: levels.len(),
            });
        }
        let mut idx = 0;
        for (k, (&l, &d)) in levels.iter().zip(&self.dims).enumerate() {
            if l >= d {
                return Err(Error::InvalidState(format!(
                    "level {l} out of range for `{}` (dim {d})",
                    self.labels[k]
                )));
            }
            idx = idx * d + l;
        }
        Ok(idx)
    }

    /// Per-factor levels of a flat basis index.
    pub fn levels(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for k in (0..self.dims.len()).rev() {
            out[k] = idx % self.dims[k];
            idx /= self.dims[k];
        }
        out
    }

    /// Subspace made of the kept labels, in declaration order.
    pub fn subspace(&self, keep: &[&str]) -> Result<Self> {
        for k in keep {
            self.index_of(k)?;
        }
        let factors: Vec<(String, usize)> = self
            .labels
            .iter()
            .zip(&self.dims)
            .filter(|(l, _)| keep.contains(&l.as_str()))
            .map(|(l, &d)| (l.clone(), d))
            .collect();
        Self::new(factors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basics() {
        let s = CompositeSpace::new([("qubit", 2), ("mech", 3), ("tls0", 2)]).unwrap();
        assert_eq!(s.dim(), 12);
        assert_eq!(s.strides(), vec![6, 2, 1]);
        assert_eq!(s.flat_index(&[1, 2, 0]).unwrap(), 10);
        assert_eq!(s.levels(10), vec![1, 2, 0]);
        assert_eq!(s.dim_of("mech").unwrap(), 3);
        assert!(matches!(s.index_of("x"), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn rejects_bad_factors() {
        assert!(CompositeSpace::new([("a", 1)]).is_err());
        assert!(CompositeSpace::new([("a", 2), ("a", 2)]).is_err());
        assert!(CompositeSpace::new([("a", 100), ("b", 100)]).is_err());
        assert!(CompositeSpace::with_cap([("a", 100), ("b", 100)], 10_000).is_ok());
    }
}
