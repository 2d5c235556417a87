//! Mechanical loss from two-level-system defects.

use serde::{Deserialize, Serialize};

use crate::units::{HBAR, K_B};
use crate::{Error, Result};

/// Σ_k 1/((k+a)² + b²) over all integers k.
fn lattice_sum(a: f64, b: f64) -> f64 {
    // (π/b)·sinh(2πb)/(cosh(2πb) − cos(2πa)), rewritten with e = e^(−2πb)
    // as (1 − e²)/((1 − e)² + 4e·sin²(πa)) to stay accurate for tiny and
    // huge b alike.
    let x = 2.0 * std::f64::consts::PI * b;
    let e = (-x).exp();
    let one_minus_e = -(-x).exp_m1();
    let s = (std::f64::consts::PI * a).sin();
    let ratio = -(-2.0 * x).exp_m1() / (one_minus_e * one_minus_e + 4.0 * e * s * s);
    std::f64::consts::PI / b * ratio
}

/// Γ1,m from an evenly spaced comb of resonant defects:
/// Σ_k g²Γ₁/((kδ+δ₀)² + (Γ₁/2)²), in closed form.
pub fn resonant_tls_loss(g: f64, delta: f64, delta0: f64, gamma1: f64, gamma_phi: f64) -> Result<f64> {
    check_comb(delta, delta0, gamma1, gamma_phi)?;
    let half = gamma1 / 2.0 + gamma_phi;
    // numerator 2Γ₂ reduces to Γ₁ without dephasing
    Ok(2.0 * g * g * half / (delta * delta) * lattice_sum(delta0 / delta, half / delta))
}

fn check_comb(delta: f64, delta0: f64, gamma1: f64, gamma_phi: f64) -> Result<()> {
    if !(delta > 0.0) {
        return Err(Error::InvalidInput("TLS spacing must be > 0".into()));
    }
    if !(delta0 >= 0.0 && delta0 <= delta / 2.0) {
        return Err(Error::InvalidInput("offset must lie in [0, spacing/2]".into()));
    }
    if !(gamma1 > 0.0 && gamma_phi >= 0.0) {
        return Err(Error::InvalidInput("TLS rates must be positive".into()));
    }
    Ok(())
}

/// Same sum evaluated term by term for |k| ≤ `k_max`, with the remaining
/// tails replaced by their midpoint integrals.
pub fn resonant_tls_loss_brute(
    g: f64,
    delta: f64,
    delta0: f64,
    gamma1: f64,
    gamma_phi: f64,
    k_max: u64,
) -> Result<f64> {
    check_comb(delta, delta0, gamma1, gamma_phi)?;
    let half = gamma1 / 2.0 + gamma_phi;
    let a = delta0 / delta;
    let b = half / delta;
    let k = k_max as f64;
    let term = |x: f64| 1.0 / ((x + a) * (x + a) + b * b);
    // Sum the small terms first.
    let mut s = 0.0;
    for i in (1..=k_max).rev() {
        let x = i as f64;
        s += term(x) + term(-x);
    }
    s += term(0.0);
    // ∫_{K+½}^∞ dx/((x±a)²+b²) = (π/2 − atan((K+½±a)/b))/b, via atan2 for
    // accuracy when the argument is large.
    let tail = |c: f64| (b).atan2(k + 0.5 + c) / b;
    s += tail(a) + tail(-a);
    Ok(2.0 * g * g * half / (delta * delta) * s)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonantTls {
    /// Transverse coupling, rad/s.
    pub g: f64,
    /// ω_TLS − ω_m, rad/s.
    pub detuning: f64,
    /// TLS frequency for the thermal factor, rad/s.
    pub omega: f64,
    pub gamma1: f64,
    pub gamma_phi: f64,
}

/// Per-defect form: Σ 2g²Γ₂·tanh(ħω/2k_BT)/(Δ² + Γ₂²) with Γ₂ = Γ₁/2 + Γφ.
pub fn resonant_tls_loss_full(tls: &[ResonantTls], temperature: f64) -> Result<f64> {
    if !(temperature >= 0.0) {
        return Err(Error::InvalidInput("temperature must be >= 0".into()));
    }
    Ok(tls
        .iter()
        .map(|d| {
            let g2 = d.gamma1 / 2.0 + d.gamma_phi;
            let th = if temperature == 0.0 {
                1.0
            } else {
                (HBAR * d.omega / (2.0 * K_B * temperature)).tanh()
            };
            2.0 * d.g * d.g * g2 * th / (d.detuning * d.detuning + g2 * g2)
        })
        .sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LongitudinalTls {
    /// Longitudinal coupling, rad/s.
    pub g_long: f64,
    /// TLS energy splitting, rad/s.
    pub omega: f64,
    pub gamma1: f64,
}

/// Σ (2g_ℓ²/ω_m)·(ħΓ₁/k_BT)·sech²(ħω/2k_BT).
pub fn relaxation_damping(tls: &[LongitudinalTls], omega_m: f64, temperature: f64) -> Result<f64> {
    if !(temperature > 0.0) {
        return Err(Error::InvalidInput("temperature must be > 0".into()));
    }
    if !(omega_m > 0.0) {
        return Err(Error::InvalidInput("omega_m must be > 0".into()));
    }
    let kt = K_B * temperature;
    Ok(tls
        .iter()
        .map(|d| {
            let x = HBAR * d.omega / (2.0 * kt);
            // sech² without overflow
            let e = (-2.0 * x.abs()).exp();
            let sech2 = 4.0 * e / (1.0 + e).powi(2);
            2.0 * d.g_long * d.g_long / omega_m * HBAR * d.gamma1 / kt * sech2
        })
        .sum())
}

/// Upper bound on the defect density, GHz⁻¹: N/(ΔV·mean|λ|) with λ in Hz/V.
pub fn tls_density_bound(n_observed: usize, delta_v: f64, mean_abs_lambda: f64) -> Result<f64> {
    if !(delta_v > 0.0 && mean_abs_lambda > 0.0) {
        return Err(Error::InvalidInput("voltage span and tuning rate must be > 0".into()));
    }
    Ok(n_observed as f64 / (delta_v * mean_abs_lambda) * 1e9)
}
