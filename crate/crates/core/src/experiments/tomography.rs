//! End-to-end Wigner tomography: prepare a Fock state, displace with a
//! random phase, record resonant Rabi traces, decompose them into Fock
//! populations and reconstruct the phase-averaged state.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rabi::{prepare_fock, PrepConfig};
use crate::model::DeviceSpec;
use crate::qops::{diag, displacement};
use crate::seed;
use crate::tomography::{
    decompose_rabi, parity, rabi_traces, radii_grid, reconstruct, simulate_rabi_basis, wigner_point, FockDistribution,
    RabiTrace, Reconstruction, WignerTomogram, DEFAULT_RADII_COUNT, DEFAULT_RADIUS_MAX,
};
use crate::{CMat, Error, Result, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TomographyConfig {
    pub prep: PrepConfig,
    /// Fock state to prepare.
    pub fock: usize,
    /// Displacement magnitudes |α|.
    pub radii: Vec<f64>,
    /// Rabi trace sample times, s.
    pub times: Vec<f64>,
    /// Highest Fock level in the decomposition basis.
    pub basis_fock: usize,
    /// Fock truncation for the displaced states.
    pub pad_dim: usize,
    /// Highest Fock level in the reconstruction.
    pub recon_fock: usize,
    pub resamples: usize,
    /// Shots per trace point; `None` gives noiseless traces.
    pub shots: Option<usize>,
    pub seed: u64,
}

impl TomographyConfig {
    pub fn new(mech: &str, fock: usize) -> Self {
        Self {
            prep: PrepConfig::new(mech),
            fock,
            radii: radii_grid(DEFAULT_RADII_COUNT, DEFAULT_RADIUS_MAX),
            times: (0..=160).map(|k| 25e-9 * k as f64).collect(),
            basis_fock: 16,
            pad_dim: 20,
            recon_fock: 5,
            resamples: 200,
            shots: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TomographyRun {
    /// Fidelity of the prepared state (before tomography).
    pub prepared_fidelity: f64,
    pub distributions: Vec<FockDistribution>,
    pub tomogram: WignerTomogram,
    pub reconstruction: Reconstruction,
}

impl TomographyRun {
    /// Phase-averaged W at the smallest radius.
    pub fn w_origin(&self) -> f64 {
        self.tomogram.w[0]
    }
}

/// Displaces a mode state by `r` and drops the coherences (uniform random
/// phase), returning a `pad`-dimensional Fock-diagonal state.
pub fn phase_averaged_displacement(rho: &CMat, r: f64, pad: usize) -> Result<CMat> {
    let big = pad + 12;
    let m = rho.nrows();
    if m > pad {
        return Err(Error::DimensionMismatch { expected: pad, got: m });
    }
    let mut padded = CMat::zeros(big, big);
    padded.view_mut((0, 0), (m, m)).copy_from(rho);
    let d = displacement(big, C64::new(r, 0.0))?;
    let moved = &d * padded * d.adjoint();
    let mut p: Vec<f64> = (0..pad).map(|n| moved[(n, n)].re.max(0.0)).collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= s);
    Ok(diag(&p))
}

/// Runs the full pipeline on device `dev` with its own decoherence. The
/// qubit is reset to its thermal state before each readout trace.
pub fn tomography_pipeline(dev: &DeviceSpec, cfg: &TomographyConfig) -> Result<TomographyRun> {
    if cfg.radii.len() < cfg.recon_fock + 1 {
        return Err(Error::InvalidInput("fewer radii than reconstructed Fock levels".into()));
    }
    if cfg.basis_fock + 1 > cfg.pad_dim {
        return Err(Error::InvalidInput("basis must fit inside the padded state".into()));
    }
    let mech = cfg.prep.mech.as_str();
    let prepared = prepare_fock(dev, &cfg.prep, cfg.fock)?;
    let states = cfg
        .radii
        .iter()
        .map(|&r| phase_averaged_displacement(&prepared.mode, r, cfg.pad_dim))
        .collect::<Result<Vec<_>>>()?;
    let traces = rabi_traces(dev, mech, &states, &cfg.times)?;
    let basis = simulate_rabi_basis(dev, mech, &cfg.times, cfg.basis_fock)?;

    let distributions = traces
        .into_par_iter()
        .enumerate()
        .map(|(i, mut p_e)| {
            if let Some(n) = cfg.shots {
                let mut rng = seed::rng(seed::derive(cfg.seed, i as u64));
                for p in &mut p_e {
                    let s = (*p * (1.0 - *p) / n as f64).sqrt();
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *p = (*p + s * z).clamp(0.0, 1.0);
                }
            }
            let tr = RabiTrace::new(cfg.times.clone(), p_e, cfg.radii[i], true)?;
            decompose_rabi(&tr, &basis)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut w = Vec::with_capacity(distributions.len());
    let mut sigma = Vec::with_capacity(distributions.len());
    for d in &distributions {
        w.push(wigner_point(parity(d).clamp(-1.0, 1.0))?);
        let s2: f64 = d.sigma.iter().map(|s| s * s).sum();
        sigma.push(std::f64::consts::FRAC_2_PI * s2.sqrt());
    }
    let tomogram = WignerTomogram::new(cfg.radii.clone(), w, sigma)?;
    let reconstruction = reconstruct(
        &tomogram,
        cfg.recon_fock,
        cfg.resamples,
        seed::derive(cfg.seed, u64::MAX),
    )?;
    Ok(TomographyRun {
        prepared_fidelity: prepared.fidelity,
        distributions,
        tomogram,
        reconstruction,
    })
}
