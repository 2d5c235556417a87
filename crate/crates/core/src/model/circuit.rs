//! Electromechanical coupling, equivalent circuit and cooperativities.

use serde::{Deserialize, Serialize};

use super::params::{DeviceSpec, MechSpec, TransmonSpec};
use crate::units::{E_CHARGE, H_PLANCK, TWO_PI};
use crate::{Error, Result};

/// g_em = g0·V_dc.
pub fn g_em(mech: &MechSpec, v_dc: f64) -> f64 {
    mech.g0 * v_dc
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransmonDerived {
    /// Asymptotic maximum frequency √(8E_J E_C) − E_C, rad/s.
    pub omega_q_max: f64,
    /// Transmon impedance, Ω.
    pub z: f64,
    /// Total capacitance, F.
    pub c_sigma: f64,
}

pub fn transmon_derived(t: &TransmonSpec) -> TransmonDerived {
    let (ej, ec) = (t.ej_max, t.ec);
    let rq = H_PLANCK / (4.0 * E_CHARGE * E_CHARGE);
    TransmonDerived {
        omega_q_max: TWO_PI * ((8.0 * ej * ec).sqrt() - ec),
        z: rq / std::f64::consts::PI * (2.0 * ec / ej).sqrt(),
        c_sigma: E_CHARGE * E_CHARGE / (2.0 * H_PLANCK * ec),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalentCircuit {
    pub ck: f64,
    pub lk: f64,
    pub cm: f64,
}

impl EquivalentCircuit {
    pub fn omega(&self) -> f64 {
        1.0 / (self.lk * (self.ck + self.cm)).sqrt()
    }
}

/// Series-LC model of the mechanics seen by the transmon.
///
/// The zero-point voltage of the transmon, V_zpf = ω_q√(ħZ/2), drives a
/// charge through C_m onto the motional branch. Matching ħg to that
/// interaction energy gives C_k + C_m = C_m²ω_m ω_q² Z/(4g²); the inductance
/// then follows from the mechanical resonance.
pub fn equivalent_circuit(mech: &MechSpec, g: f64, transmon: &TransmonSpec) -> Result<EquivalentCircuit> {
    if !(g > 0.0) {
        return Err(Error::InvalidInput(format!("coupling must be positive, got {g}")));
    }
    if !(mech.cm > 0.0) {
        return Err(Error::spec("mechanics.cm", "motional capacitance must be positive"));
    }
    let z = transmon_derived(transmon).z;
    let wq = transmon.omega_q;
    let wm = mech.omega_m;
    let c_tot = mech.cm * mech.cm * wm * wq * wq * z / (4.0 * g * g);
    if c_tot <= mech.cm {
        return Err(Error::InvalidInput(format!(
            "coupling {g:e} too strong for motional capacitance {:e}",
            mech.cm
        )));
    }
    Ok(EquivalentCircuit {
        ck: c_tot - mech.cm,
        lk: 1.0 / (wm * wm * c_tot),
        cm: mech.cm,
    })
}

/// Coupling implied by an equivalent circuit (inverse of the above).
pub fn g_from_circuit(c: &EquivalentCircuit, omega_m: f64, transmon: &TransmonSpec) -> f64 {
    let z = transmon_derived(transmon).z;
    let c_tot = c.ck + c.cm;
    0.5 * c.cm * transmon.omega_q * (omega_m * z / c_tot).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cooperativities {
    pub c_t1: f64,
    pub c_t2: f64,
}

/// C_T1 = 4g²T1,m T1,q and C_T2 = g²T2,m* T2,q*, using the qubit coherence
/// stored for that mode. The coupling is evaluated at `bias` (defaults to the
/// device bias) because lifetimes and couplings may be characterised at
/// different voltages.
pub fn cooperativities(dev: &DeviceSpec, mech: usize, bias: Option<f64>) -> Result<Cooperativities> {
    let m = dev
        .mechanics
        .get(mech)
        .ok_or_else(|| Error::InvalidInput(format!("no mechanics mode {mech}")))?;
    let g = g_em(m, bias.unwrap_or(dev.v_dc));
    let t1q = m.qubit_t1.unwrap_or(dev.transmon.t1);
    let t2q = m.qubit_t2_star.unwrap_or(dev.transmon.t2_star);
    Ok(Cooperativities {
        c_t1: 4.0 * g * g * m.t1 * t1q,
        c_t2: g * g * m.t2_star() * t2q,
    })
}
