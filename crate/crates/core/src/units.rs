//! Physical constants (CODATA 2018 exact values where defined) and
//! small thermal helpers.

use std::f64::consts::PI;

pub const HBAR: f64 = 1.054_571_817e-34;
pub const H_PLANCK: f64 = 6.626_070_15e-34;
pub const K_B: f64 = 1.380_649e-23;
pub const E_CHARGE: f64 = 1.602_176_634e-19;
pub const TWO_PI: f64 = 2.0 * PI;

/// Angular frequency for a frequency given in Hz.
pub fn hz(f: f64) -> f64 {
    TWO_PI * f
}

/// Bose occupation of a mode at angular frequency `omega` and temperature `t`.
pub fn bose(omega: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    1.0 / (HBAR * omega / (K_B * t)).exp_m1()
}

/// Temperature reproducing a Bose occupation `n` at angular frequency `omega`.
pub fn bose_temperature(omega: f64, n: f64) -> Option<f64> {
    if n <= 0.0 || !n.is_finite() {
        return None;
    }
    Some(HBAR * omega / (K_B * (1.0 + 1.0 / n).ln()))
}

/// Excited-state population of a two-level system in equilibrium.
pub fn two_level_population(omega: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let x = (-HBAR * omega / (K_B * t)).exp();
    x / (1.0 + x)
}

/// Temperature from the ground/excited population ratio of a two-level system.
pub fn ratio_temperature(omega: f64, p_g: f64, p_e: f64) -> Option<f64> {
    if p_e <= 0.0 || p_g <= p_e {
        return None;
    }
    Some(HBAR * omega / (K_B * (p_g / p_e).ln()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qubit_at_60mk() {
        let w = hz(5.1071e9);
        let p = two_level_population(w, 0.060);
        assert!((p - 0.01655).abs() < 2e-4, "{p}");
        let t = ratio_temperature(w, 1.0 - p, p).unwrap();
        assert!((t - 0.060).abs() < 1e-12);
    }

    #[test]
    fn bose_round_trip() {
        let w = hz(4.9e9);
        let n = bose(w, 0.072);
        assert!((bose_temperature(w, n).unwrap() - 0.072).abs() < 1e-12);
        assert_eq!(bose(w, 0.0), 0.0);
        assert!(bose_temperature(w, 0.0).is_none());
    }
}
