//! Phonon counting through the dispersive (ac Stark) shift of the qubit.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::engine::{propagate, propagate_batch, EvolveOptions, Generator};
use crate::fitkit::{fit_exp_decay, fit_fringes, FitResult};
use crate::model::{
    build_hamiltonian, collapse_ops_with_qubit_pop, device_space, drive_operator, pulse_unitary, qubit_bath_population,
    qubit_projector, DeviceSpec, RotatingFrame, Transition,
};
use crate::qops::linalg::kron;
use crate::qops::{annihilation, qubit_thermal};
use crate::units::hz;
use crate::{CMat, Error, Result, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarkConfig {
    pub mech: String,
    /// ω_q − ω_m during readout, rad/s.
    pub detuning: f64,
    /// Artificial Ramsey fringe frequency, Hz.
    pub fringe: f64,
    pub delays: Vec<f64>,
    /// Use the transmon (three-level) shift formula when inverting.
    pub anharmonic: bool,
}

impl StarkConfig {
    /// 2 MHz fringe sampled over 3 µs.
    pub fn new(mech: &str, detuning: f64) -> Self {
        Self {
            mech: mech.to_string(),
            detuning,
            fringe: 2e6,
            delays: (0..121).map(|k| 25e-9 * k as f64).collect(),
            anharmonic: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarkReadout {
    /// Fitted Ramsey frequency for each state, Hz.
    pub frequencies: Vec<f64>,
    /// Fitted frequency with the mode in vacuum, Hz.
    pub reference: f64,
    /// Qubit shift relative to the vacuum reference, rad/s.
    pub shifts: Vec<f64>,
    pub phonons: Vec<f64>,
}

/// Mean phonon number from a measured qubit shift (rad/s). With `alpha`
/// the transmon form δ = −2g²α n̄/(Δ(Δ − α)) is inverted, otherwise
/// δ = 2g² n̄/Δ.
pub fn phonons_from_shift(shift: f64, g: f64, delta: f64, alpha: Option<f64>) -> f64 {
    match alpha {
        Some(a) => shift * delta * (delta - a) / (-2.0 * g * g * a),
        None => shift * delta / (2.0 * g * g),
    }
}

struct Ramsey {
    gen: Generator,
    qubit: CMat,
    u: CMat,
    readout: CMat,
}

fn ramsey_setup(dev: &DeviceSpec, cfg: &StarkConfig, fock_dim: usize) -> Result<Ramsey> {
    if !(cfg.fringe > 0.0) || cfg.delays.len() < 8 {
        return Err(Error::InvalidInput(
            "Stark readout needs a positive fringe and ≥ 8 delays".into(),
        ));
    }
    let mut d = dev.select(&cfg.mech, false)?;
    d.fock_dim = fock_dim;
    let wq = d.mechanics[0].omega_m + cfg.detuning;
    d.transmon.omega_q = wq;
    let pq = qubit_bath_population(dev, wq);
    let space = device_space(&d)?;
    let h = build_hamiltonian(&d, &RotatingFrame::at(wq - hz(cfg.fringe)))?;
    let cs = collapse_ops_with_qubit_pop(&d, pq)?;
    let jumps: Vec<(&CMat, f64)> = cs.iter().map(|c| (c.op.matrix(), c.rate)).collect();
    let u = pulse_unitary(&drive_operator(&d, &space, Transition::Ge, 0.0)?, FRAC_PI_2);
    let p_e = qubit_projector(&d, &space, 1)?.into_matrix();
    Ok(Ramsey {
        gen: Generator::new(h.matrix(), None, &jumps),
        qubit: qubit_thermal(d.transmon.levels, pq)?,
        readout: u.adjoint() * &p_e * &u,
        u,
    })
}

/// Ramsey fringe frequency (Hz) with the mode in each of `states`.
pub fn ramsey_frequencies(dev: &DeviceSpec, cfg: &StarkConfig, states: &[CMat]) -> Result<Vec<f64>> {
    let dim = states.iter().map(|s| s.nrows()).max().unwrap_or(1).max(dev.fock_dim);
    let r = ramsey_setup(dev, cfg, dim)?;
    let init: Vec<CMat> = states
        .iter()
        .map(|s| {
            let mut m = CMat::zeros(dim, dim);
            m.view_mut((0, 0), (s.nrows(), s.nrows())).copy_from(s);
            let rho = kron(&r.qubit, &m);
            &r.u * rho * r.u.adjoint()
        })
        .collect();
    let traces = propagate_batch(&r.gen, &init, &cfg.delays, &r.readout, &EvolveOptions::default())?;
    traces
        .iter()
        .map(|y| {
            let f = fit_fringes(&cfg.delays, y)?;
            if !f.identifiable {
                return Err(Error::FitFailure("Ramsey fringe not identifiable".into()));
            }
            Ok(f.frequency)
        })
        .collect()
}

/// Stark-shift phonon counting: Ramsey frequencies of the qubit detuned by
/// `cfg.detuning` from the mode, referenced to the same measurement with the
/// mode in vacuum, converted to n̄.
pub fn stark_phonon_readout(dev: &DeviceSpec, cfg: &StarkConfig, states: &[CMat]) -> Result<StarkReadout> {
    let mut all = vec![CMat::from_element(1, 1, C64::new(1.0, 0.0))];
    all.extend_from_slice(states);
    let f = ramsey_frequencies(dev, cfg, &all)?;
    let i = dev.mech_index(&cfg.mech)?;
    let g = dev.g_em(i);
    let alpha = (cfg.anharmonic && dev.transmon.levels > 2).then_some(dev.transmon.anharmonicity);
    let shifts: Vec<f64> = f[1..].iter().map(|v| hz(v - f[0])).collect();
    Ok(StarkReadout {
        frequencies: f[1..].to_vec(),
        reference: f[0],
        phonons: shifts
            .iter()
            .map(|&s| phonons_from_shift(s, g, cfg.detuning, alpha))
            .collect(),
        shifts,
    })
}

/// Free decay of a mode state under its own dissipators (qubit absent),
/// returning the state at each delay.
pub fn mode_decay(dev: &DeviceSpec, mech: &str, rho0: &CMat, delays: &[f64]) -> Result<Vec<CMat>> {
    let m = &dev.mechanics[dev.mech_index(mech)?];
    let dim = rho0.nrows();
    let n = m.thermal_pop;
    let b = annihilation(dim)?.into_matrix();
    let bd = b.adjoint();
    let h = CMat::zeros(dim, dim);
    let mut jumps: Vec<(&CMat, f64)> = vec![(&b, (1.0 + n) / m.t1)];
    if n > 0.0 {
        jumps.push((&bd, n / m.t1));
    }
    let gen = Generator::new(&h, None, &jumps);
    delays
        .iter()
        .map(|&t| {
            if t <= 0.0 {
                Ok(rho0.clone())
            } else {
                Ok(propagate(&gen, rho0, t, &[], &[], &EvolveOptions::default())?.0)
            }
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct PhononDecay {
    pub delays: Vec<f64>,
    pub phonons: Vec<f64>,
    pub fit: FitResult,
    /// Fitted lifetime, s.
    pub tau: f64,
}

/// Lets `rho0` decay for each delay and counts the phonons left through the
/// Stark shift, then fits an exponential with offset.
pub fn stark_decay(dev: &DeviceSpec, cfg: &StarkConfig, rho0: &CMat, delays: &[f64]) -> Result<PhononDecay> {
    let states = mode_decay(dev, &cfg.mech, rho0, delays)?;
    let r = stark_phonon_readout(dev, cfg, &states)?;
    let fit = fit_exp_decay(delays, &r.phonons, true)?;
    let tau = fit
        .get("tau")
        .ok_or_else(|| Error::FitFailure("decay fit has no `tau`".into()))?;
    Ok(PhononDecay {
        delays: delays.to_vec(),
        phonons: r.phonons,
        fit,
        tau,
    })
}
