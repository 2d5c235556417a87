//! Standard model functions and the generic least-squares driver.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::nelder_mead::{nelder_mead, NmOptions};
use crate::{seed, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SigmaMethod {
    Jacobian,
    Bootstrap,
    None,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitResult {
    pub names: Vec<String>,
    pub params: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Residual sum of squares at the optimum.
    pub residual: f64,
    pub converged: bool,
    pub n_eval: usize,
    pub sigma_method: SigmaMethod,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.params[i])
    }

    pub fn sigma_of(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.sigma[i])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// a·e^(−t/τ) [+ c]
    ExpDecay,
    /// a·e^(−(t/τ)²) [+ c]
    GaussDecay,
    /// A·e^(−t/τ)·cos(2πft + φ) + c
    DampedSinusoid,
    /// w·2γ/(γ² + ω²) + A/|ω|^α
    LorentzianPlusPowerlaw,
    /// a + b·x
    Linear,
}

impl ModelKind {
    pub fn names(self) -> &'static [&'static str] {
        match self {
            ModelKind::ExpDecay => &["amplitude", "tau", "offset"],
            ModelKind::GaussDecay => &["amplitude", "tau", "offset"],
            ModelKind::DampedSinusoid => &["amplitude", "tau", "frequency", "phase", "offset"],
            ModelKind::LorentzianPlusPowerlaw => &["weight", "gamma", "a", "alpha"],
            ModelKind::Linear => &["intercept", "slope"],
        }
    }

    pub fn eval(self, p: &[f64], x: f64) -> f64 {
        match self {
            ModelKind::ExpDecay => p[0] * (-x / p[1]).exp() + p[2],
            ModelKind::GaussDecay => p[0] * (-(x / p[1]).powi(2)).exp() + p[2],
            ModelKind::DampedSinusoid => {
                p[0] * (-x / p[1]).exp() * (std::f64::consts::TAU * p[2] * x + p[3]).cos() + p[4]
            }
            ModelKind::LorentzianPlusPowerlaw => p[0] * 2.0 * p[1] / (p[1] * p[1] + x * x) + p[2] / x.abs().powf(p[3]),
            ModelKind::Linear => p[0] + p[1] * x,
        }
    }
}

/// A model with some parameters held fixed.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelFn {
    pub kind: ModelKind,
    pub fixed: Vec<Option<f64>>,
}

impl ModelFn {
    pub fn new(kind: ModelKind) -> Self {
        Self {
            kind,
            fixed: vec![None; kind.names().len()],
        }
    }

    pub fn fix(mut self, name: &str, value: f64) -> Self {
        let i = self
            .kind
            .names()
            .iter()
            .position(|n| *n == name)
            .unwrap_or_else(|| panic!("{name} is not a parameter of {:?}", self.kind));
        self.fixed[i] = Some(value);
        self
    }

    fn free(&self) -> Vec<usize> {
        (0..self.fixed.len()).filter(|&i| self.fixed[i].is_none()).collect()
    }

    fn assemble(&self, free_vals: &[f64]) -> Vec<f64> {
        let mut it = free_vals.iter();
        self.fixed
            .iter()
            .map(|f| f.unwrap_or_else(|| *it.next().unwrap()))
            .collect()
    }
}

/// Residual function used by the covariance and bootstrap helpers.
pub trait Residuals {
    fn residuals(&self, p: &[f64], y: &[f64]) -> Vec<f64>;
}

struct ModelResiduals<'a> {
    model: &'a ModelFn,
    x: &'a [f64],
}

impl Residuals for ModelResiduals<'_> {
    fn residuals(&self, p: &[f64], y: &[f64]) -> Vec<f64> {
        let full = self.model.assemble(p);
        self.x
            .iter()
            .zip(y)
            .map(|(&x, &y)| self.model.kind.eval(&full, x) - y)
            .collect()
    }
}

fn rss(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Minimise the residual sum of squares in coordinates scaled by `scale`.
pub(crate) fn minimise_scaled<R: Residuals>(
    model: &R,
    y: &[f64],
    p0: &[f64],
    scale: &[f64],
    opts: &NmOptions,
) -> Result<(Vec<f64>, f64, usize, bool)> {
    let u0: Vec<f64> = p0.iter().zip(scale).map(|(p, s)| p / s).collect();
    let obj = |u: &[f64]| {
        let p: Vec<f64> = u.iter().zip(scale).map(|(u, s)| u * s).collect();
        rss(&model.residuals(&p, y))
    };
    let mut o = opts.clone();
    if o.initial_step.is_none() {
        o.initial_step = Some(u0.iter().map(|&v| if v != 0.0 { 0.1 * v } else { 0.1 }).collect());
    }
    let r = nelder_mead(obj, &u0, &o)?;
    let p: Vec<f64> = r.x.iter().zip(scale).map(|(u, s)| u * s).collect();
    Ok((p, r.fx, r.n_eval, r.converged))
}

/// Central-difference Jacobian of the residual vector.
pub(crate) fn jacobian<R: Residuals>(model: &R, p: &[f64], y: &[f64], scale: &[f64]) -> DMatrix<f64> {
    let m = y.len();
    let k = p.len();
    let mut j = DMatrix::zeros(m, k);
    for c in 0..k {
        let h = 1e-6 * p[c].abs().max(scale[c].abs()).max(1e-300);
        let mut pp = p.to_vec();
        let mut pm = p.to_vec();
        pp[c] += h;
        pm[c] -= h;
        let rp = model.residuals(&pp, y);
        let rm = model.residuals(&pm, y);
        for r in 0..m {
            j[(r, c)] = (rp[r] - rm[r]) / (2.0 * h);
        }
    }
    j
}

/// Covariance s²(JᵀJ)⁻¹, or None when JᵀJ is numerically singular.
pub(crate) fn jacobian_covariance(j: &DMatrix<f64>, rss: f64, n: usize) -> Option<DMatrix<f64>> {
    let k = j.ncols();
    if n <= k {
        return None;
    }
    // Column-normalise before testing the conditioning.
    let norms: Vec<f64> = (0..k).map(|c| j.column(c).norm()).collect();
    if norms.iter().any(|&v| v == 0.0 || !v.is_finite()) {
        return None;
    }
    let js = DMatrix::from_fn(j.nrows(), k, |r, c| j[(r, c)] / norms[c]);
    let jtj = js.transpose() * &js;
    let ev = jtj.clone().symmetric_eigenvalues();
    let (lo, hi) = (ev.min(), ev.max());
    if lo <= hi * 1e-14 {
        return None;
    }
    let inv = jtj.try_inverse()?;
    let s2 = rss / (n - k) as f64;
    Some(DMatrix::from_fn(k, k, |a, b| s2 * inv[(a, b)] / (norms[a] * norms[b])))
}

/// Residual bootstrap: refit on optimum + resampled residuals.
pub(crate) fn bootstrap_sigma<R: Residuals>(
    model: &R,
    y: &[f64],
    p: &[f64],
    scale: &[f64],
    resamples: usize,
) -> Vec<f64> {
    let res = model.residuals(p, y);
    let fitted: Vec<f64> = y.iter().zip(&res).map(|(y, r)| y + r).collect();
    let mut rng = seed::rng(0x5eed_b007);
    let mut samples: Vec<Vec<f64>> = Vec::new();
    let opts = NmOptions {
        max_eval: 4000,
        xtol: 1e-8,
        ftol: 1e-14,
        restart: false,
        ..Default::default()
    };
    for _ in 0..resamples {
        let yb: Vec<f64> = fitted.iter().map(|f| f - res[rng.random_range(0..res.len())]).collect();
        if let Ok((pb, _, _, _)) = minimise_scaled(model, &yb, p, scale, &opts) {
            samples.push(pb);
        }
    }
    (0..p.len())
        .map(|c| {
            let n = samples.len().max(2) as f64;
            let mean = samples.iter().map(|s| s[c]).sum::<f64>() / n;
            (samples.iter().map(|s| (s[c] - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        })
        .collect()
}

pub(crate) fn finish<R: Residuals>(
    model: &R,
    names: Vec<String>,
    y: &[f64],
    p: Vec<f64>,
    scale: &[f64],
    n_eval: usize,
    converged: bool,
) -> FitResult {
    let residual = rss(&model.residuals(&p, y));
    let j = jacobian(model, &p, y, scale);
    let (sigma, method) = match jacobian_covariance(&j, residual, y.len()) {
        Some(cov) => (
            (0..p.len()).map(|i| cov[(i, i)].max(0.0).sqrt()).collect(),
            SigmaMethod::Jacobian,
        ),
        None => (bootstrap_sigma(model, y, &p, scale, 200), SigmaMethod::Bootstrap),
    };
    FitResult {
        names,
        params: p,
        sigma,
        residual,
        converged,
        n_eval,
        sigma_method: method,
    }
}

/// Least-squares fit of `model` to (x, y) starting at the full parameter
/// vector `p0` (fixed entries are ignored).
pub fn fit_model(model: &ModelFn, x: &[f64], y: &[f64], p0: &[f64]) -> Result<FitResult> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if p0.len() != model.fixed.len() {
        return Err(Error::DimensionMismatch {
            expected: model.fixed.len(),
            got: p0.len(),
        });
    }
    let free = model.free();
    if y.len() < free.len() {
        return Err(Error::FitFailure("fewer samples than free parameters".into()));
    }
    let pf: Vec<f64> = free.iter().map(|&i| p0[i]).collect();
    let scale: Vec<f64> = pf.iter().map(|v| if *v != 0.0 { v.abs() } else { 1.0 }).collect();
    let r = ModelResiduals { model, x };
    let (p, _, n_eval, converged) = minimise_scaled(&r, y, &pf, &scale, &NmOptions::default())?;
    let mut fit = finish(&r, Vec::new(), y, p, &scale, n_eval, converged);
    // Re-expand to full parameter list; fixed entries get zero sigma.
    let full = model.assemble(&fit.params);
    let mut sig = vec![0.0; full.len()];
    for (k, &i) in free.iter().enumerate() {
        sig[i] = fit.sigma[k];
    }
    fit.names = model.kind.names().iter().map(|s| s.to_string()).collect();
    fit.params = full;
    fit.sigma = sig;
    Ok(fit)
}

/// Weighted straight-line fit returning (intercept, slope) and their σ.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<FitResult> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::FitFailure("linear fit needs at least two points".into()));
    }
    let a = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { x[i] });
    let b = DVector::from_column_slice(y);
    let (p, rss) = super::lsq::linear_lstsq(&a, &b)?;
    let (sigma, method) = if n > 2 {
        let cov = (a.transpose() * &a).try_inverse().map(|m| m * (rss / (n - 2) as f64));
        match cov {
            Some(c) => (vec![c[(0, 0)].sqrt(), c[(1, 1)].sqrt()], SigmaMethod::Jacobian),
            None => (vec![0.0, 0.0], SigmaMethod::None),
        }
    } else {
        (vec![0.0, 0.0], SigmaMethod::None)
    };
    Ok(FitResult {
        names: vec!["intercept".into(), "slope".into()],
        params: vec![p[0], p[1]],
        sigma,
        residual: rss,
        converged: true,
        n_eval: 1,
        sigma_method: method,
    })
}
