//! Phase-averaged Wigner tomography of a mechanical mode: Fock
//! decomposition of resonant Rabi traces, displaced parity, constrained
//! reconstruction and fidelities.

mod basis;
mod wigner;

pub use basis::{rabi_trace, rabi_traces, simulate_rabi_basis, RabiBasis};
pub use wigner::{displaced_parity, laguerre, wigner_fock, wigner_from_state, DEFAULT_RADII_COUNT, DEFAULT_RADIUS_MAX};

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fitkit::lsq::{condition_number, simplex_lstsq};
use crate::qops::DensityMatrix;
use crate::{seed, CVec, Error, Result};

/// Design matrices with a condition number above this are rejected.
pub const MAX_CONDITION: f64 = 1e8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RabiTrace {
    pub times: Vec<f64>,
    pub p_e: Vec<f64>,
    /// Displacement amplitude |α| applied before the readout.
    pub r: f64,
    pub phase_averaged: bool,
}

impl RabiTrace {
    pub fn new(times: Vec<f64>, p_e: Vec<f64>, r: f64, phase_averaged: bool) -> Result<Self> {
        let t = Self {
            times,
            p_e,
            r,
            phase_averaged,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.len() != self.p_e.len() {
            return Err(Error::DimensionMismatch {
                expected: self.times.len(),
                got: self.p_e.len(),
            });
        }
        if let Some(p) = self.p_e.iter().find(|p| !(**p >= -1e-9 && **p <= 1.0 + 1e-9)) {
            return Err(Error::InvalidInput(format!("P_e = {p} outside [0, 1]")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FockDistribution {
    pub p: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Sum of squared residuals of the fit that produced it.
    pub residual: f64,
}

impl FockDistribution {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        let d = Self {
            sigma: vec![0.0; p.len()],
            p,
            residual: 0.0,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidInput("negative Fock population".into()));
        }
        let s: f64 = self.p.iter().sum();
        if (s - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidInput(format!("Fock populations sum to {s}")));
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.p.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }
}

/// Σ(−1)ⁿ pₙ.
pub fn parity(p: &FockDistribution) -> f64 {
    p.p.iter()
        .enumerate()
        .map(|(n, v)| if n % 2 == 0 { *v } else { -*v })
        .sum()
}

/// W = (2/π)·parity.
pub fn wigner_point(parity: f64) -> Result<f64> {
    if !(parity.abs() <= 1.0 + 1e-9) {
        return Err(Error::InvalidInput(format!("parity {parity} outside [-1, 1]")));
    }
    Ok(std::f64::consts::FRAC_2_PI * parity)
}

/// Decomposes a Rabi trace into per-Fock basis curves with the weights
/// constrained to the probability simplex.
pub fn decompose_rabi(trace: &RabiTrace, basis: &RabiBasis) -> Result<FockDistribution> {
    trace.validate()?;
    if trace.times.len() != basis.times.len()
        || trace
            .times
            .iter()
            .zip(&basis.times)
            .any(|(a, b)| (a - b).abs() > 1e-15 + 1e-9 * b.abs())
    {
        return Err(Error::InvalidInput("trace and basis sampled at different times".into()));
    }
    let m = trace.times.len();
    let k = basis.curves.len();
    let a = DMatrix::from_fn(m, k, |i, n| basis.curves[n][i]);
    let b = DVector::from_column_slice(&trace.p_e);
    solve_simplex(&a, &b)
}

fn solve_simplex(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<FockDistribution> {
    let cond = condition_number(a);
    if !(cond <= MAX_CONDITION) {
        return Err(Error::IllConditioned(cond));
    }
    let fit = simplex_lstsq(a, b)?;
    let m = a.nrows();
    let support: Vec<usize> = (0..a.ncols()).filter(|&i| fit.x[i] > 1e-12).collect();
    let mut sigma = vec![0.0; a.ncols()];
    // Linearised covariance on the active support with the equality
    // constraint eliminated via the KKT system.
    let dof = m.saturating_sub(support.len().saturating_sub(1)).max(1);
    let s2 = fit.residual / dof as f64;
    if !support.is_empty() && s2 > 0.0 {
        let q = support.len();
        let mut kkt = DMatrix::zeros(q + 1, q + 1);
        for (r, &i) in support.iter().enumerate() {
            for (c, &j) in support.iter().enumerate() {
                kkt[(r, c)] = a.column(i).dot(&a.column(j));
            }
            kkt[(r, q)] = 1.0;
            kkt[(q, r)] = 1.0;
        }
        if let Some(inv) = kkt.try_inverse() {
            for (r, &i) in support.iter().enumerate() {
                sigma[i] = (s2 * inv[(r, r)].max(0.0)).sqrt();
            }
        }
    }
    Ok(FockDistribution {
        p: fit.x.iter().copied().collect(),
        sigma,
        residual: fit.residual,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WignerTomogram {
    pub radii: Vec<f64>,
    /// Phase-averaged W̄(r).
    pub w: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl WignerTomogram {
    pub fn new(radii: Vec<f64>, w: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        let t = Self { radii, w, sigma };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.radii.len() != self.w.len() || self.w.len() != self.sigma.len() {
            return Err(Error::InvalidInput("tomogram columns differ in length".into()));
        }
        for (w, s) in self.w.iter().zip(&self.sigma) {
            if !(*s >= 0.0) || w.abs() > std::f64::consts::FRAC_2_PI + 3.0 * s + 1e-9 {
                return Err(Error::InvalidInput(format!("|W| = {} exceeds 2/π + 3σ", w.abs())));
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,w,sigma\n");
        for i in 0..self.radii.len() {
            s.push_str(&format!("{:e},{:e},{:e}\n", self.radii[i], self.w[i], self.sigma[i]));
        }
        s
    }
}

/// Uniform radii grid on [0, r_max].
pub fn radii_grid(count: usize, r_max: f64) -> Vec<f64> {
    if count == 1 {
        return vec![0.0];
    }
    (0..count).map(|i| r_max * i as f64 / (count - 1) as f64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    /// Diagonal of the reconstructed density matrix.
    pub p: Vec<f64>,
    pub sigma: Vec<f64>,
    pub residual: f64,
    pub resamples: usize,
}

impl Reconstruction {
    pub fn density_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.p))
    }

    pub fn distribution(&self) -> FockDistribution {
        FockDistribution {
            p: self.p.clone(),
            sigma: self.sigma.clone(),
            residual: self.residual,
        }
    }
}

/// Least-squares fit of a diagonal, non-negative, unit-trace ρ′ to the
/// tomogram, weighting points by 1/σ. Uncertainties come from refitting
/// `resamples` Gaussian perturbations of the points.
pub fn reconstruct(tomo: &WignerTomogram, max_fock: usize, resamples: usize, seed: u64) -> Result<Reconstruction> {
    tomo.validate()?;
    let k = max_fock + 1;
    if tomo.radii.len() < k {
        return Err(Error::InvalidInput(format!(
            "{} radii cannot constrain {k} Fock levels",
            tomo.radii.len()
        )));
    }
    let weights: Vec<f64> = tomo
        .sigma
        .iter()
        .map(|s| if *s > 0.0 { 1.0 / s } else { 1.0 })
        .collect();
    let design = DMatrix::from_fn(tomo.radii.len(), k, |i, n| weights[i] * wigner_fock(n, tomo.radii[i]));
    let rhs = |w: &[f64]| DVector::from_iterator(w.len(), w.iter().zip(&weights).map(|(v, s)| v * s));
    let best = solve_simplex(&design, &rhs(&tomo.w))?;
    let mut sigma = vec![0.0; k];
    if resamples > 1 {
        let draws: Vec<Vec<f64>> = (0..resamples)
            .into_par_iter()
            .map(|j| {
                let mut rng = seed::rng(seed::derive(seed, j as u64));
                let w: Vec<f64> = tomo
                    .w
                    .iter()
                    .zip(&tomo.sigma)
                    .map(|(w, s)| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        w + s * z
                    })
                    .collect();
                simplex_lstsq(&design, &rhs(&w))
                    .map(|f| f.x.iter().copied().collect())
                    .unwrap_or_else(|_| best.p.clone())
            })
            .collect();
        for (n, s) in sigma.iter_mut().enumerate() {
            let mean = draws.iter().map(|d| d[n]).sum::<f64>() / resamples as f64;
            let var = draws.iter().map(|d| (d[n] - mean).powi(2)).sum::<f64>() / (resamples - 1) as f64;
            *s = var.sqrt();
        }
    }
    Ok(Reconstruction {
        p: best.p,
        sigma,
        residual: best.residual,
        resamples,
    })
}

/// √⟨ψ|ρ|ψ⟩.
pub fn fidelity(rho: &DensityMatrix, target: &CVec) -> Result<f64> {
    Ok(rho.overlap_pure(target)?.clamp(0.0, 1.0).sqrt())
}

/// Fidelity of a Fock-diagonal state with |n⟩: √pₙ.
pub fn fock_fidelity(p: &[f64], n: usize) -> f64 {
    p.get(n).copied().unwrap_or(0.0).clamp(0.0, 1.0).sqrt()
}

/// Poisson distribution with mean `nbar`, truncated to `len` levels.
pub fn poisson(nbar: f64, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut p = (-nbar).exp();
    for n in 0..len {
        out.push(p);
        p *= nbar / (n + 1) as f64;
    }
    out
}

/// Kullback–Leibler divergence D(p‖q) over the common support of p.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, b)| a * (a / b.max(1e-300)).ln())
        .sum()
}

/// Least-squares Poisson mean for a measured distribution.
pub fn fit_poisson(p: &[f64]) -> Result<f64> {
    let cost = |x: &[f64]| {
        let q = poisson(x[0].max(0.0), p.len());
        p.iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
    };
    let start = p.iter().enumerate().map(|(n, v)| n as f64 * v).sum::<f64>();
    let r = crate::fitkit::nelder_mead(
        cost,
        &[start.max(1e-3)],
        &crate::fitkit::NmOptions {
            initial_step: Some(vec![0.1 * start.max(0.1)]),
            ..Default::default()
        },
    )?;
    Ok(r.x[0].max(0.0))
}

/// Linear amplitude→|α| calibration through the origin from Poisson means
/// of displaced vacuum: |α| = c·amplitude with n̄ = |α|².
pub fn calibrate_displacement(amplitudes: &[f64], nbar: &[f64]) -> Result<f64> {
    if amplitudes.len() != nbar.len() || amplitudes.is_empty() {
        return Err(Error::InvalidInput(
            "calibration needs matching, non-empty inputs".into(),
        ));
    }
    let num: f64 = amplitudes.iter().zip(nbar).map(|(a, n)| a * n.max(0.0).sqrt()).sum();
    let den: f64 = amplitudes.iter().map(|a| a * a).sum();
    if den == 0.0 {
        return Err(Error::InvalidInput("all calibration amplitudes are zero".into()));
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests;
