//! Vacuum Rabi oscillations, Fock-state preparation and mechanical T1.

use serde::{Deserialize, Serialize};

use super::scan::{scan, Axis, ScanResult};
use super::sequence::Runner;
use crate::engine::{evolve, LindbladProblem, Segment, Trajectory};
use crate::fitkit::fit_exp_decay;
use crate::model::analytics::{mech_decay_rate, qubit_kappa};
use crate::model::{
    build_hamiltonian, collapse_ops_with_qubit_pop, qubit_bath_population, qubit_projector, DeviceSpec, RotatingFrame,
};
use crate::qops::{embed, number, DensityMatrix};
use crate::{CMat, Error, Result};

/// Qubit excited, mode `mech` in equilibrium, then resonant exchange for
/// `duration`, sampled at `n_samples` points. Records `p_e` and `n_mech`.
pub fn vacuum_rabi(dev: &DeviceSpec, mech: &str, duration: f64, n_samples: usize) -> Result<Trajectory> {
    if !(duration > 0.0) || n_samples < 2 {
        return Err(Error::InvalidInput(
            "vacuum Rabi needs a positive duration and ≥ 2 samples".into(),
        ));
    }
    let mut d = dev.select(mech, false)?;
    let wm = d.mechanics[0].omega_m;
    d.transmon.omega_q = wm;
    let runner = Runner::new(&d, wm)?;
    let mut rho = runner.thermal_state()?;
    runner.pulse(&mut rho, std::f64::consts::PI, 0.0)?;
    let space = runner.space().clone();
    let h = build_hamiltonian(&d, &RotatingFrame::at(wm))?;
    let mut p = LindbladProblem::new(DensityMatrix::new(space.clone(), rho)?);
    p.segments.push(Segment::new(duration, h));
    p.collapse = collapse_ops_with_qubit_pop(&d, qubit_bath_population(dev, wm))?;
    p.observables = vec![
        ("p_e".into(), qubit_projector(&d, &space, 1)?),
        ("n_mech".into(), embed(&number(d.fock_dim)?, &space, mech)?),
    ];
    p.sample_times = (0..n_samples)
        .map(|k| duration * k as f64 / (n_samples - 1) as f64)
        .collect();
    evolve(&p)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrepConfig {
    pub mech: String,
    /// Resonant sideband-free cooling time before preparation, s.
    pub cooling: f64,
    /// Swap duration override, s.
    pub swap: Option<f64>,
}

impl PrepConfig {
    pub fn new(mech: &str) -> Self {
        Self {
            mech: mech.to_string(),
            cooling: 25e-6,
            swap: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Prepared {
    /// Joint qubit–mode state right after preparation.
    pub state: CMat,
    /// Reduced state of the mode.
    pub mode: CMat,
    /// √⟨n|ρ|n⟩ for the requested Fock state.
    pub fidelity: f64,
    pub runner_device: DeviceSpec,
}

/// Prepares |n⟩ in `cfg.mech`: the qubit is held resonant with the mode so
/// both relax towards the qubit bath, then n rounds of qubit π pulse and
/// swap (the k-th swap lasting π/(2g√k)) climb the Fock ladder.
pub fn prepare_fock(dev: &DeviceSpec, cfg: &PrepConfig, n: usize) -> Result<Prepared> {
    let d = dev.select(&cfg.mech, false)?;
    if n + 2 > d.fock_dim {
        return Err(Error::spec("fock_dim", format!("too small to prepare |{n}⟩")));
    }
    let wm = d.mechanics[0].omega_m;
    let mut runner = Runner::new(&d, wm)?;
    runner.set_qubit_frequency(wm);
    let mut rho = runner.thermal_state()?;
    runner.wait(&mut rho, cfg.cooling)?;
    let t_swap = match cfg.swap {
        Some(t) => t,
        None => runner.swap_time(&cfg.mech)?,
    };
    for k in 1..=n {
        runner.pulse(&mut rho, std::f64::consts::PI, 0.0)?;
        runner.swap(&mut rho, &cfg.mech, Some(t_swap / (k as f64).sqrt()))?;
    }
    let mode = runner.mode_state(&rho, &cfg.mech)?;
    let fidelity = mode[(n, n)].re.clamp(0.0, 1.0).sqrt();
    Ok(Prepared {
        state: rho,
        mode,
        fidelity,
        runner_device: d,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LifetimeResult {
    pub scan: ScanResult,
    pub tau: f64,
    pub tau_sigma: f64,
    /// 1/(Γi + (g/Δ)²κ) for the parked qubit.
    pub predicted_tau: f64,
}

/// Single-phonon lifetime: swap |1⟩ into the mode, park the qubit at
/// `park_detuning` for each delay, swap back and read P_e.
pub fn mech_lifetime(dev: &DeviceSpec, mech: &str, delays: &[f64], park_detuning: f64) -> Result<LifetimeResult> {
    let d = dev.select(mech, false)?;
    let m = &d.mechanics[0];
    let g = d.g_em(0);
    if park_detuning.abs() < 5.0 * g.abs() {
        log::warn!("park detuning below 5g, the decay will be Purcell-dominated");
    }
    let wm = m.omega_m;
    let mut runner = Runner::new(&d, wm)?;
    runner.set_detuning(None, park_detuning)?;
    let mut start = runner.thermal_state()?;
    runner.pulse(&mut start, std::f64::consts::PI, 0.0)?;
    runner.swap(&mut start, mech, None)?;
    // Delays are independent: each point reuses the prepared state.
    let runner = std::sync::Mutex::new(runner);
    let res = scan(vec![Axis::new("delay_s", delays.to_vec())], "p_e", &[], 0, |x, _| {
        let mut r = runner.lock().expect("runner lock");
        let mut rho = start.clone();
        r.wait(&mut rho, x[0])?;
        r.swap(&mut rho, mech, None)?;
        Ok(vec![r.excited_population(&rho)])
    })?;
    // Right after the swap the qubit still holds part of the excitation;
    // points inside that transient are left out of the fit.
    let settle = 20.0 * d.transmon.t1;
    let (t, y): (Vec<f64>, Vec<f64>) = delays
        .iter()
        .zip(&res.values)
        .filter(|(t, _)| **t >= settle)
        .map(|(a, b)| (*a, *b))
        .unzip();
    let (t, y) = if t.len() >= 8 {
        (t, y)
    } else {
        (delays.to_vec(), res.values.clone())
    };
    let fit = fit_exp_decay(&t, &y, true)?;
    let kappa = qubit_kappa(d.transmon.t2_star);
    Ok(LifetimeResult {
        tau: fit.get("tau").unwrap_or(f64::NAN),
        tau_sigma: fit.sigma_of("tau").unwrap_or(f64::NAN),
        predicted_tau: 1.0 / mech_decay_rate(1.0 / m.t1, g, park_detuning, kappa),
        scan: res,
    })
}
