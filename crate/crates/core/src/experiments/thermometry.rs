//! Rabi population measurement (RPM) thermometry of the qubit and, through
//! a swap, of a mechanical mode.

use serde::{Deserialize, Serialize};

use super::sequence::Runner;
use crate::engine::{evolve, propagate_batch, EvolveOptions, Generator, LindbladProblem, Segment};
use crate::fitkit::fit_fringes;
use crate::model::{
    build_hamiltonian, collapse_ops_with_qubit_pop, device_space, qubit_bath_population, qubit_projector, DeviceSpec,
    RotatingFrame, Transition,
};
use crate::qops::linalg::kron;
use crate::qops::{diag, fock, qubit_thermal, thermal, DensityMatrix};
use crate::units::{bose_temperature, hz, ratio_temperature};
use crate::{CMat, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "target", content = "label", rename_all = "snake_case")]
pub enum ThermometryTarget {
    Qubit,
    Mech(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RpmConfig {
    /// e–f Rabi frequency, rad/s.
    pub rabi_amplitude: f64,
    pub duration: f64,
    pub samples: usize,
    /// Qubit excited population while the Stark tone is on, used as the
    /// qubit state before the mechanics→qubit swap. Defaults to the
    /// device's `stark_thermal_pop`.
    pub stark_population: Option<f64>,
}

impl Default for RpmConfig {
    fn default() -> Self {
        Self {
            rabi_amplitude: hz(10e6),
            duration: 500e-9,
            samples: 201,
            stark_population: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thermometry {
    /// Qubit excited fraction P_e/(P_g + P_e) from the two RPM branches.
    pub population: f64,
    /// K.
    pub temperature: f64,
    /// Rabi amplitudes without and with the g–e π pulse.
    pub amplitudes: [f64; 2],
    /// Inferred phonon occupation for a mechanical target.
    pub phonons: Option<f64>,
}

fn qubit_only(dev: &DeviceSpec) -> Result<DeviceSpec> {
    if dev.transmon.levels != 3 {
        return Err(Error::spec("transmon.levels", "RPM needs three qubit levels"));
    }
    let mut d = dev.clone();
    d.mechanics.clear();
    d.tls.clear();
    Ok(d)
}

/// e–f Rabi oscillation amplitude of P_e starting from `rho` (qubit only).
fn ef_amplitude(dev: &DeviceSpec, rho: &CMat, cfg: &RpmConfig, p_bath: f64) -> Result<f64> {
    let space = device_space(dev)?;
    // In a frame at ω_ef, e and f are degenerate and the drive is static.
    let w_ef = dev.transmon.omega_q + dev.transmon.anharmonicity;
    let frame = RotatingFrame::at(w_ef).with_drive(cfg.rabi_amplitude, 0.0, Transition::Ef);
    let mut p = LindbladProblem::new(DensityMatrix::new(space.clone(), rho.clone())?);
    p.segments
        .push(Segment::new(cfg.duration, build_hamiltonian(dev, &frame)?));
    p.collapse = collapse_ops_with_qubit_pop(dev, p_bath)?;
    p.observables = vec![("p_e".into(), qubit_projector(dev, &space, 1)?)];
    p.sample_times = (0..cfg.samples)
        .map(|k| cfg.duration * k as f64 / (cfg.samples - 1) as f64)
        .collect();
    let tr = evolve(&p)?;
    let fit = fit_fringes(&tr.times, tr.series("p_e")?)?;
    Ok(if fit.identifiable { fit.amplitude.abs() } else { 0.0 })
}

/// Both RPM branches on a three-level qubit state; returns (P_e fraction,
/// amplitudes).
fn rpm_branches(dev: &DeviceSpec, rho: &CMat, cfg: &RpmConfig, p_bath: f64) -> Result<(f64, [f64; 2])> {
    let a1 = ef_amplitude(dev, rho, cfg, p_bath)?;
    let runner = Runner::new(dev, dev.transmon.omega_q)?;
    let mut flipped = rho.clone();
    runner.pulse(&mut flipped, std::f64::consts::PI, 0.0)?;
    let a2 = ef_amplitude(dev, &flipped, cfg, p_bath)?;
    if a1 + a2 <= 0.0 {
        return Err(Error::NoTemperature("no Rabi signal in either branch".into()));
    }
    Ok((a1 / (a1 + a2), [a1, a2]))
}

/// Linear map from a thermal mode occupation to the qubit populations after
/// a resonant swap. The swap conserves excitation number, so the response to
/// each initial Fock state is computed once and thermal states are mixtures.
/// The swap is simulated on the g–e manifold; the f level is detuned by the
/// anharmonicity and stays empty.
pub struct SwapMap {
    /// response[k] = P_e after the swap with the mode starting in |k⟩.
    response: Vec<f64>,
    p_stark: f64,
}

impl SwapMap {
    pub fn new(dev: &DeviceSpec, mech: &str, p_stark: f64, n_max: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&p_stark) {
            return Err(Error::InvalidInput(format!(
                "qubit population {p_stark} outside [0, 0.5)"
            )));
        }
        let mut d = dev.select(mech, false)?;
        d.transmon.levels = 2;
        let need = (n_max + 6.0 * n_max.sqrt() + 4.0).ceil() as usize;
        d.fock_dim = d.fock_dim.max(need);
        let wm = d.mechanics[0].omega_m;
        d.transmon.omega_q = wm;
        let space = device_space(&d)?;
        let h = build_hamiltonian(&d, &RotatingFrame::at(wm))?;
        let cs = collapse_ops_with_qubit_pop(&d, qubit_bath_population(dev, wm))?;
        let jumps: Vec<(&CMat, f64)> = cs.iter().map(|c| (c.op.matrix(), c.rate)).collect();
        let gen = Generator::new(h.matrix(), None, &jumps);
        let t_swap = std::f64::consts::FRAC_PI_2 / d.g_em(0).abs();
        let q = qubit_thermal(d.transmon.levels, p_stark)?;
        let states = (0..d.fock_dim)
            .map(|k| Ok(kron(&q, &fock(d.fock_dim, k)?)))
            .collect::<Result<Vec<_>>>()?;
        let opts = EvolveOptions::default();
        let pe = propagate_batch(
            &gen,
            &states,
            &[t_swap],
            qubit_projector(&d, &space, 1)?.matrix(),
            &opts,
        )?;
        Ok(Self {
            response: pe.iter().map(|e| e[0]).collect(),
            p_stark,
        })
    }

    pub fn qubit_start(&self) -> f64 {
        self.p_stark
    }

    /// Qubit P_e after swapping in a thermal mode with occupation `n`.
    pub fn excited(&self, n: f64) -> f64 {
        let dim = self.response.len();
        match thermal(dim, n) {
            Ok(m) => self.response.iter().enumerate().map(|(k, r)| m[(k, k)].re * r).sum(),
            Err(_) => f64::NAN,
        }
    }

    /// Reduced qubit state (diagonal, f empty) after the swap.
    pub fn qubit_state(&self, levels: usize, n: f64) -> CMat {
        let e = self.excited(n);
        let mut p = vec![0.0; levels.max(2)];
        p[0] = 1.0 - e;
        p[1] = e;
        diag(&p)
    }

    /// Occupation reproducing a measured P_e, by bisection.
    pub fn invert(&self, p_measured: f64) -> Result<f64> {
        let f = |n: f64| self.excited(n) - p_measured;
        let (mut lo, mut hi) = (0.0, 1e-3);
        if f(lo) >= 0.0 {
            return Err(Error::NoTemperature(format!(
                "measured population {p_measured:.4} at or below the zero-phonon value {:.4}",
                self.excited(0.0)
            )));
        }
        while f(hi) < 0.0 {
            hi *= 2.0;
            if hi > 64.0 {
                return Err(Error::NoTemperature("population beyond the swap map range".into()));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-10 * (1.0 + hi) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// RPM thermometry. For the qubit the device's equilibrium state is
/// measured; for a mode the mode is first swapped into a qubit prepared at
/// the Stark-on population and the swap map is inverted numerically.
pub fn rpm_thermometry(dev: &DeviceSpec, target: &ThermometryTarget, cfg: &RpmConfig) -> Result<Thermometry> {
    if cfg.samples < 8 || !(cfg.duration > 0.0) {
        return Err(Error::InvalidInput(
            "RPM needs ≥ 8 samples and a positive duration".into(),
        ));
    }
    let q = qubit_only(dev)?;
    let p_bath = q.transmon.thermal_pop;
    match target {
        ThermometryTarget::Qubit => {
            let rho = qubit_thermal(3, p_bath)?;
            let (p, amps) = rpm_branches(&q, &rho, cfg, p_bath)?;
            let t = ratio_temperature(q.transmon.omega_q, 1.0 - p, p)
                .ok_or_else(|| Error::NoTemperature(format!("population ratio undefined (P_e = {p:.3e})")))?;
            Ok(Thermometry {
                population: p,
                temperature: t,
                amplitudes: amps,
                phonons: None,
            })
        }
        ThermometryTarget::Mech(label) => {
            let i = dev.mech_index(label)?;
            let m = &dev.mechanics[i];
            let p_stark = cfg.stark_population.unwrap_or(dev.transmon.stark_thermal_pop);
            let map = SwapMap::new(dev, label, p_stark, 1.0_f64.max(4.0 * m.thermal_pop))?;
            let rho = map.qubit_state(3, m.thermal_pop);
            let (p, amps) = rpm_branches(&q, &rho, cfg, p_bath)?;
            let n = map.invert(p)?;
            let t =
                bose_temperature(m.omega_m, n).ok_or_else(|| Error::NoTemperature("zero phonon occupation".into()))?;
            Ok(Thermometry {
                population: p,
                temperature: t,
                amplitudes: amps,
                phonons: Some(n),
            })
        }
    }
}
