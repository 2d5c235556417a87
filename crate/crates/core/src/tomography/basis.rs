//! Per-Fock resonant Rabi curves used to decompose measured traces.

use serde::{Deserialize, Serialize};

use crate::engine::{propagate_batch, EvolveOptions, Generator};
use crate::model::{
    build_hamiltonian, collapse_ops_with_qubit_pop, device_space, qubit_bath_population, qubit_projector, DeviceSpec,
    RotatingFrame,
};
use crate::qops::linalg::kron;
use crate::qops::{fock, qubit_thermal};
use crate::{CMat, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RabiBasis {
    pub times: Vec<f64>,
    /// curves[n][k]: P_e at times[k] for the mode starting in |n⟩.
    pub curves: Vec<Vec<f64>>,
    /// Qubit excited population at the start of each trace.
    pub qubit_pop: f64,
}

impl RabiBasis {
    pub fn max_fock(&self) -> usize {
        self.curves.len() - 1
    }
}

struct Resonant {
    gen: Generator,
    p_e: CMat,
    qubit: CMat,
    fock_dim: usize,
}

/// The qubit parked on resonance with `mech`, with the device dissipators
/// and the qubit bath re-evaluated at the mechanical frequency.
fn resonant(dev: &DeviceSpec, mech: &str, fock_dim: usize) -> Result<Resonant> {
    let mut d = dev.select(mech, false)?;
    let wm = d.mechanics[0].omega_m;
    d.transmon.omega_q = wm;
    d.fock_dim = fock_dim;
    let pq = qubit_bath_population(dev, wm);
    let h = build_hamiltonian(&d, &RotatingFrame::at(wm))?;
    let cs = collapse_ops_with_qubit_pop(&d, pq)?;
    let jumps: Vec<(&CMat, f64)> = cs.iter().map(|c| (c.op.matrix(), c.rate)).collect();
    let gen = Generator::new(h.matrix(), None, &jumps);
    let space = device_space(&d)?;
    Ok(Resonant {
        gen,
        p_e: qubit_projector(&d, &space, 1)?.into_matrix(),
        qubit: qubit_thermal(d.transmon.levels, pq)?,
        fock_dim,
    })
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() || times[0] < 0.0 || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput(
            "Rabi times must be non-empty, non-negative and sorted".into(),
        ));
    }
    Ok(())
}

fn initial(sys: &Resonant, rho_mech: &CMat) -> Result<CMat> {
    let m = rho_mech.nrows();
    if m > sys.fock_dim {
        return Err(Error::DimensionMismatch {
            expected: sys.fock_dim,
            got: m,
        });
    }
    let mut padded = CMat::zeros(sys.fock_dim, sys.fock_dim);
    padded.view_mut((0, 0), (m, m)).copy_from(rho_mech);
    Ok(kron(&sys.qubit, &padded))
}

fn run_batch(sys: &Resonant, states: &[CMat], times: &[f64]) -> Result<Vec<Vec<f64>>> {
    let init = states.iter().map(|s| initial(sys, s)).collect::<Result<Vec<_>>>()?;
    let raw = propagate_batch(&sys.gen, &init, times, &sys.p_e, &EvolveOptions::default())?;
    Ok(raw
        .into_iter()
        .map(|v| v.into_iter().map(|p| p.clamp(0.0, 1.0)).collect())
        .collect())
}

/// Resonant Rabi trace P_e(t) of a mechanical state `rho_mech` (Fock
/// basis) swapped with a thermal qubit.
pub fn rabi_trace(dev: &DeviceSpec, mech: &str, rho_mech: &CMat, times: &[f64]) -> Result<Vec<f64>> {
    check_times(times)?;
    let sys = resonant(dev, mech, dev.fock_dim.max(rho_mech.nrows()))?;
    Ok(run_batch(&sys, std::slice::from_ref(rho_mech), times)?.remove(0))
}

/// Batched [`rabi_trace`] over several mechanical states.
pub fn rabi_traces(dev: &DeviceSpec, mech: &str, states: &[CMat], times: &[f64]) -> Result<Vec<Vec<f64>>> {
    check_times(times)?;
    let dim = states.iter().map(|s| s.nrows()).max().unwrap_or(0).max(dev.fock_dim);
    let sys = resonant(dev, mech, dim)?;
    run_batch(&sys, states, times)
}

/// Rabi curves for |n⟩, n = 0..=max_fock, computed with two spare levels.
pub fn simulate_rabi_basis(dev: &DeviceSpec, mech: &str, times: &[f64], max_fock: usize) -> Result<RabiBasis> {
    check_times(times)?;
    let dim = max_fock + 3;
    let sys = resonant(dev, mech, dim)?;
    let states = (0..=max_fock).map(|n| fock(dim, n)).collect::<Result<Vec<_>>>()?;
    let curves = run_batch(&sys, &states, times)?;
    Ok(RabiBasis {
        times: times.to_vec(),
        curves,
        qubit_pop: sys.qubit[(1, 1)].re,
    })
}
