//! Rotating-frame Hamiltonian and Lindblad dissipators.
//!
//! Every excitation-number-conserving term is written relative to a frame
//! rotating at `reference` on all subsystems, so H only contains detunings.

use serde::{Deserialize, Serialize};

use super::params::DeviceSpec;
use crate::qops::{annihilation, embed, number, transition, CompositeSpace, Operator};
use crate::{CMat, Error, Result, C64};

pub const QUBIT: &str = "qubit";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transition {
    /// |g⟩ ↔ |e⟩
    Ge,
    /// |e⟩ ↔ |f⟩, needs three levels.
    Ef,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitDrive {
    /// Rabi frequency Ω, rad/s.
    pub amplitude: f64,
    pub phase: f64,
    pub transition: Transition,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotatingFrame {
    /// Frame (and drive) frequency, rad/s.
    pub reference: f64,
    pub drive: Option<QubitDrive>,
}

impl RotatingFrame {
    pub fn at(reference: f64) -> Self {
        Self { reference, drive: None }
    }

    pub fn with_drive(mut self, amplitude: f64, phase: f64, transition: Transition) -> Self {
        self.drive = Some(QubitDrive {
            amplitude,
            phase,
            transition,
        });
        self
    }
}

#[derive(Clone, Debug)]
pub struct CollapseOp {
    pub label: String,
    pub op: Operator,
    pub rate: f64,
}

/// qubit ⊗ mechanics (declaration order) ⊗ defects.
pub fn device_space(dev: &DeviceSpec) -> Result<CompositeSpace> {
    let mut f: Vec<(String, usize)> = vec![(QUBIT.to_string(), dev.transmon.levels)];
    f.extend(dev.mechanics.iter().map(|m| (m.label.clone(), dev.fock_dim)));
    f.extend(dev.tls.iter().map(|t| (t.label.clone(), 2)));
    CompositeSpace::new(f)
}

/// Qubit lowering operator √n|n−1⟩⟨n| embedded in `space`.
pub fn qubit_lowering(dev: &DeviceSpec, space: &CompositeSpace) -> Result<Operator> {
    embed(&annihilation(dev.transmon.levels)?, space, QUBIT)
}

pub fn qubit_projector(dev: &DeviceSpec, space: &CompositeSpace, level: usize) -> Result<Operator> {
    embed(&transition(dev.transmon.levels, level, level)?, space, QUBIT)
}

/// Total excitation number: qubit + phonons + excited defects.
pub fn excitation_number(dev: &DeviceSpec, space: &CompositeSpace) -> Result<Operator> {
    let mut n = embed(&number(dev.transmon.levels)?, space, QUBIT)?;
    for m in &dev.mechanics {
        n = &n + &embed(&number(dev.fock_dim)?, space, &m.label)?;
    }
    for t in &dev.tls {
        n = &n + &embed(&number(2)?, space, &t.label)?;
    }
    Ok(n)
}

/// ½(e^{iφ}σ+ + e^{−iφ}σ−) on the selected transition.
pub fn drive_operator(dev: &DeviceSpec, space: &CompositeSpace, tr: Transition, phase: f64) -> Result<Operator> {
    let lv = dev.transmon.levels;
    let (lo, hi) = match tr {
        Transition::Ge => (0, 1),
        Transition::Ef => {
            if lv < 3 {
                return Err(Error::spec("transmon.levels", "e-f drive needs three levels"));
            }
            (1, 2)
        }
    };
    let up = transition(lv, hi, lo)?.scale_c(C64::from_polar(0.5, phase));
    let local = &up + &up.dagger();
    embed(&local, space, QUBIT)
}

fn diag_local(v: &[f64]) -> Result<Operator> {
    Operator::local(crate::qops::diag(v))
}

/// Rotating-frame Hamiltonian.
pub fn build_hamiltonian(dev: &DeviceSpec, frame: &RotatingFrame) -> Result<Operator> {
    dev.validate()?;
    let space = device_space(dev)?;
    let wr = frame.reference;
    let t = &dev.transmon;
    let lv = t.levels;
    let qdiag: Vec<f64> = (0..lv)
        .map(|n| {
            let n = n as f64;
            let mut e = (t.omega_q - wr) * n;
            if lv == 3 {
                e += 0.5 * t.anharmonicity * n * (n - 1.0);
            }
            e
        })
        .collect();
    let mut h = embed(&diag_local(&qdiag)?, &space, QUBIT)?;

    let a = qubit_lowering(dev, &space)?;
    let ad = a.dagger();
    let mut lowering = Vec::new();
    for (i, m) in dev.mechanics.iter().enumerate() {
        let b = embed(&annihilation(dev.fock_dim)?, &space, &m.label)?;
        let nb = &b.dagger() * &b;
        h = &h + &nb.scale(m.omega_m - wr);
        let g = dev.g_em(i);
        if g != 0.0 {
            h = &h + &(&(&ad * &b) + &(&a * &b.dagger())).scale(g);
        }
        lowering.push(b);
    }
    for (i, tl) in dev.tls.iter().enumerate() {
        let sm = embed(&transition(2, 0, 1)?, &space, &tl.label)?;
        let sp = sm.dagger();
        h = &h + &(&sp * &sm).scale(dev.tls_omega(i) - wr);
        let b = &lowering[tl.mode];
        h = &h + &(&(&sp * b) + &(&sm * &b.dagger())).scale(tl.g_tls);
    }
    if let Some(d) = &frame.drive {
        check_fock_for_drive(dev, frame, d.amplitude)?;
        h = &h + &drive_operator(dev, &space, d.transition, d.phase)?.scale(d.amplitude);
    }
    let dev_h = h.hermitian_deviation();
    if dev_h > 1e-12 * (1.0 + h.matrix().camax()) {
        return Err(Error::NonHermitian(dev_h));
    }
    Ok(h)
}

/// Linear-response estimate of the phonon number a qubit drive pumps into
/// each mode; the truncation must sit well above it.
fn check_fock_for_drive(dev: &DeviceSpec, frame: &RotatingFrame, omega: f64) -> Result<()> {
    let t = &dev.transmon;
    let gamma2 = 1.0 / t.t2_star;
    let dq = t.omega_q - frame.reference;
    for (i, m) in dev.mechanics.iter().enumerate() {
        let g = dev.g_em(i);
        if g == 0.0 {
            continue;
        }
        let chi = 1.0 / (dq * dq + gamma2 * gamma2);
        let eps = 0.5 * omega * g * chi.sqrt();
        let kappa = 1.0 / m.t1 + 2.0 * g * g * gamma2 * chi;
        let dm = m.omega_m - frame.reference;
        let n_est = eps * eps / (dm * dm + 0.25 * kappa * kappa) + m.thermal_pop;
        let need = n_est + 4.0 * n_est.sqrt() + 1.0;
        if (dev.fock_dim as f64) < need {
            return Err(Error::InvalidSpec {
                field: "fock_dim".into(),
                reason: format!(
                    "{} levels too few for drive amplitude {omega:.3e} rad/s on mode `{}` (expect ~{n_est:.2} phonons, need {})",
                    dev.fock_dim,
                    m.label,
                    need.ceil()
                ),
            });
        }
    }
    Ok(())
}

/// Thermal bath occupation that gives a two-level steady population `p`.
pub fn bath_occupation(p: f64) -> f64 {
    p / (1.0 - 2.0 * p)
}

/// Qubit bath population at frequency `omega`, holding fixed the bath
/// temperature implied by `thermal_pop` at the configured qubit frequency.
pub fn qubit_bath_population(dev: &DeviceSpec, omega: f64) -> f64 {
    let t = &dev.transmon;
    match crate::units::ratio_temperature(t.omega_q, 1.0 - t.thermal_pop, t.thermal_pop) {
        Some(temp) => crate::units::two_level_population(omega, temp),
        None => 0.0,
    }
}

/// Dissipators at the device's equilibrium qubit population.
pub fn collapse_ops(dev: &DeviceSpec) -> Result<Vec<CollapseOp>> {
    collapse_ops_with_qubit_pop(dev, dev.transmon.thermal_pop)
}

/// Dissipators with the qubit bath set to give steady population `p_q`.
///
/// Pure dephasing is emitted as √2·n (or σz/√2 for two levels) at rate
/// Γφ = 1/T2* − 1/(2T1), so that g–e coherences decay at exactly Γφ.
pub fn collapse_ops_with_qubit_pop(dev: &DeviceSpec, p_q: f64) -> Result<Vec<CollapseOp>> {
    dev.validate()?;
    if !(0.0..0.5).contains(&p_q) {
        return Err(Error::spec("transmon.thermal_pop", format!("{p_q} outside [0, 0.5)")));
    }
    let space = device_space(dev)?;
    let t = &dev.transmon;
    let mut out = Vec::new();
    let a = qubit_lowering(dev, &space)?;
    let nq = bath_occupation(p_q);
    out.push(CollapseOp {
        label: "qubit_down".into(),
        op: a.clone(),
        rate: (1.0 + nq) / t.t1,
    });
    if nq > 0.0 {
        out.push(CollapseOp {
            label: "qubit_up".into(),
            op: a.dagger(),
            rate: nq / t.t1,
        });
    }
    let gphi = 1.0 / t.t2_star - 0.5 / t.t1;
    if gphi > 0.0 {
        let z = if t.levels == 2 {
            crate::qops::sigma_z_excitation(2)?.scale(std::f64::consts::FRAC_1_SQRT_2)
        } else {
            number(t.levels)?.scale(std::f64::consts::SQRT_2)
        };
        out.push(CollapseOp {
            label: "qubit_dephasing".into(),
            op: embed(&z, &space, QUBIT)?,
            rate: gphi,
        });
    }
    for m in &dev.mechanics {
        let b = embed(&annihilation(dev.fock_dim)?, &space, &m.label)?;
        let n = m.thermal_pop;
        out.push(CollapseOp {
            label: format!("{}_down", m.label),
            op: b.clone(),
            rate: (1.0 + n) / m.t1,
        });
        if n > 0.0 {
            out.push(CollapseOp {
                label: format!("{}_up", m.label),
                op: b.dagger(),
                rate: n / m.t1,
            });
        }
        let gphi = 1.0 / m.t2_star() - 0.5 / m.t1;
        if gphi > 1e-12 / m.t1 {
            out.push(CollapseOp {
                label: format!("{}_dephasing", m.label),
                op: (&b.dagger() * &b).scale(std::f64::consts::SQRT_2),
                rate: gphi,
            });
        }
    }
    for tl in &dev.tls {
        let sm = embed(&transition(2, 0, 1)?, &space, &tl.label)?;
        out.push(CollapseOp {
            label: format!("{}_down", tl.label),
            op: sm.clone(),
            rate: tl.gamma1,
        });
        if tl.gamma_phi > 0.0 {
            out.push(CollapseOp {
                label: format!("{}_dephasing", tl.label),
                op: embed(
                    &crate::qops::sigma_z_excitation(2)?.scale(std::f64::consts::FRAC_1_SQRT_2),
                    &space,
                    &tl.label,
                )?,
                rate: tl.gamma_phi,
            });
        }
    }
    Ok(out)
}

/// Unitary exp(−iθ·D) for a drive operator D, e.g. an instantaneous pulse.
pub fn pulse_unitary(drive: &Operator, theta: f64) -> CMat {
    crate::qops::linalg::expm(&(drive.matrix() * C64::new(0.0, -theta)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::params::fixtures::device;
    use crate::units::hz;
    use nalgebra::SymmetricEigen;

    fn eig(h: &Operator) -> Vec<f64> {
        let mut v: Vec<f64> = SymmetricEigen::new(h.matrix().clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    fn single(dev: &DeviceSpec) -> DeviceSpec {
        dev.select("B", false).unwrap()
    }

    #[test]
    fn resonant_splitting_is_2g() {
        let mut d = single(&device());
        d.transmon.omega_q = d.mechanics[0].omega_m;
        let h = build_hamiltonian(&d, &RotatingFrame::at(d.mechanics[0].omega_m)).unwrap();
        let ev = eig(&h);
        // Eigenvalues: 0, ±g (one excitation), ±√2 g, ...
        let g = d.g_em(0);
        let one: Vec<f64> = ev.iter().copied().filter(|e| (e.abs() - g).abs() < 1e-6 * g).collect();
        assert_eq!(one.len(), 2);
        assert!((g - hz(230e3)).abs() < 1e-6 * g);
    }

    #[test]
    fn dispersive_shift() {
        let mut d = single(&device());
        let wm = d.mechanics[0].omega_m;
        let delta = hz(5e6);
        d.transmon.omega_q = wm + delta;
        let h = build_hamiltonian(&d, &RotatingFrame::at(wm)).unwrap();
        let g = d.g_em(0);
        // Oracle: exact 2×2 block of the single-excitation manifold.
        let exact_lo = 0.5 * delta - (0.25 * delta * delta + g * g).sqrt();
        let ev = eig(&h);
        let lo = ev
            .iter()
            .copied()
            .min_by(|a, b| (a - exact_lo).abs().partial_cmp(&(b - exact_lo).abs()).unwrap())
            .unwrap();
        assert!((lo - exact_lo).abs() < 1e-6);
        // −g²/Δ to O(g⁴/Δ³).
        assert!((lo + g * g / delta).abs() < 2.0 * g.powi(4) / delta.powi(3));
    }

    #[test]
    fn zero_coupling_block_diagonal() {
        let mut d = single(&device());
        d.v_dc = 0.0;
        let h = build_hamiltonian(&d, &RotatingFrame::at(hz(4.8e9))).unwrap();
        let m = h.matrix();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if i != j {
                    assert_eq!(m[(i, j)], C64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn dephasing_rate_and_thermal_channels() {
        let mut d = single(&device());
        d.transmon.t1 = 1.55e-6;
        d.transmon.t2_star = 1.05e-6;
        d.transmon.thermal_pop = 0.0;
        let c = collapse_ops(&d).unwrap();
        let gphi = c.iter().find(|c| c.label == "qubit_dephasing").unwrap().rate;
        assert!((gphi - 6.30e5).abs() < 1e3, "{gphi}");
        assert!(!c.iter().any(|c| c.label == "qubit_up"));
        d.transmon.t2_star = 2.0 * d.transmon.t1;
        let c = collapse_ops(&d).unwrap();
        assert!(!c.iter().any(|c| c.label == "qubit_dephasing"));
        d.transmon.t2_star = 2.1 * d.transmon.t1;
        assert!(matches!(collapse_ops(&d), Err(Error::InvalidSpec { .. })));
    }

    #[test]
    fn drive_needs_enough_levels() {
        let mut d = single(&device());
        let wm = d.mechanics[0].omega_m;
        d.transmon.omega_q = wm;
        d.fock_dim = 2;
        let weak = RotatingFrame::at(wm).with_drive(hz(5e3), 0.0, Transition::Ge);
        assert!(build_hamiltonian(&d, &weak).is_ok());
        let strong = RotatingFrame::at(wm).with_drive(hz(2e6), 0.0, Transition::Ge);
        assert!(matches!(build_hamiltonian(&d, &strong), Err(Error::InvalidSpec { .. })));
        assert!(drive_operator(&d, &device_space(&d).unwrap(), Transition::Ef, 0.0).is_err());
    }
}
