//! Closed-form rates used to interpret simulations and measurements.

use crate::units::HBAR;
use crate::C64;

/// Mechanical decay through a detuned lossy qubit, (g/Δ)²κ.
pub fn inverse_purcell_rate(g: f64, delta: f64, kappa: f64) -> f64 {
    (g / delta).powi(2) * kappa
}

/// Total mechanical energy decay rate Γi + (g/Δ)²κ.
pub fn mech_decay_rate(gamma_i: f64, g: f64, delta: f64, kappa: f64) -> f64 {
    gamma_i + inverse_purcell_rate(g, delta, kappa)
}

/// Qubit linewidth entering the inverse-Purcell rate: the decay rate of
/// the qubit amplitude times two, 1/T1 + 2Γφ = 2/T2*.
pub fn qubit_kappa(t2_star: f64) -> f64 {
    2.0 / t2_star
}

/// Energy decay rate of the mechanics-like normal mode from the exact
/// non-Hermitian 2×2 amplitude problem (oracle for the perturbative form).
pub fn hybrid_mode_decay(g: f64, delta: f64, kappa: f64, gamma_m: f64) -> f64 {
    // Amplitudes: d/dt (a, b) = −i M (a, b), M = [[Δ − iκ/2, g], [g, −iΓm/2]].
    let a = C64::new(delta, -0.5 * kappa);
    let d = C64::new(0.0, -0.5 * gamma_m);
    let tr = a + d;
    let det = a * d - g * g;
    let disc = (tr * tr - det * 4.0).sqrt();
    let l1 = (tr + disc) * 0.5;
    let l2 = (tr - disc) * 0.5;
    // The mechanics-like eigenvalue is the one closer to the bare mode.
    let l = if (l1 - d).norm() < (l2 - d).norm() { l1 } else { l2 };
    -2.0 * l.im
}

/// Dispersive qubit shift per phonon number, 2g²n̄/Δ.
pub fn stark_shift(g: f64, delta: f64, nbar: f64) -> f64 {
    2.0 * g * g * nbar / delta
}

/// Transmon-corrected form −2g²α n̄/(Δ(Δ − α)).
pub fn stark_shift_anharmonic(g: f64, delta: f64, alpha: f64, nbar: f64) -> f64 {
    -2.0 * g * g * alpha * nbar / (delta * (delta - alpha))
}

/// Two-level dispersive slope including the next order, (2g²/Δ)(1 − g²/Δ²).
pub fn stark_slope_two_level(g: f64, delta: f64) -> f64 {
    2.0 * g * g / delta * (1.0 - g * g / (delta * delta))
}

/// Phonon number from power emitted into a waveguide, P = n ħω κ_e / 2.
pub fn phonons_from_power(p_out: f64, omega_m: f64, kappa_e: f64) -> f64 {
    2.0 * p_out / (HBAR * omega_m * kappa_e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::hz;

    #[test]
    fn purcell_arithmetic() {
        let k = 1.0 / 1.7e-6;
        let r = inverse_purcell_rate(hz(200e3), hz(5e6), k);
        assert!((r - 941.0).abs() < 1.0, "{r}");
        let tau = 1.0 / mech_decay_rate(40.0, hz(160e3), hz(35e6), k);
        assert!((tau - 19.1e-3).abs() < 0.1e-3, "{tau}");
    }

    #[test]
    fn exact_hybrid_matches_perturbative() {
        let g = hz(200e3);
        let k = 1.0 / 1.7e-6;
        for ratio in [10.0, 25.0, 50.0, 175.0] {
            let d = ratio * g;
            let exact = hybrid_mode_decay(g, d, k, 40.0);
            let approx = mech_decay_rate(40.0, g, d, k);
            assert!((exact / approx - 1.0).abs() < 0.03, "Δ/g={ratio}: {exact} vs {approx}");
        }
    }

    #[test]
    fn stark_values() {
        let g = hz(200e3);
        let d = hz(5e6);
        assert!((stark_shift(g, d, 1.0) / hz(16e3) - 1.0).abs() < 1e-12);
        let s = stark_shift_anharmonic(g, d, hz(-226e6), 1.0);
        assert!((s / hz(15.65e3) - 1.0).abs() < 1e-3, "{}", s / hz(1.0));
        assert_eq!(stark_shift(g, d, 0.0), 0.0);
    }

    #[test]
    fn emitted_power_inverse() {
        let w = hz(4.9e9);
        let ke = hz(1e3);
        let p = 3.0 * HBAR * w * ke / 2.0;
        assert!((phonons_from_power(p, w, ke) - 3.0).abs() < 1e-12);
    }
}
