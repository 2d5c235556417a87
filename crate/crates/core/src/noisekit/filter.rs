//! Gaussian-phase dephasing from filter-function integrals, and the
//! fluctuator-ensemble decay laws.

use serde::{Deserialize, Serialize};

use super::psd::SpectralDensity;
use super::quad::integrate_pieces;
use super::telegraph::{FluctuatorEnsemble, SequenceKind};
use crate::{Error, Result};

/// How the infrared cutoff ω_ir enters the integral.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IrCutoff {
    /// High-pass 1 − sinc²(ω/2ω_ir): the spectrum seen after removing the
    /// mean over a record of length 1/ω_ir.
    #[default]
    Window,
    /// Sharp cut at |ω| = ω_ir.
    Hard,
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Filter F(ωt) so that x = −(t²/2)∫dω S(ω) F.
pub fn filter(kind: SequenceKind, omega: f64, t: f64) -> f64 {
    let u = omega * t;
    match kind {
        SequenceKind::Ramsey => sinc(u / 2.0).powi(2),
        SequenceKind::Echo => (u / 4.0).sin().powi(2) * sinc(u / 4.0).powi(2),
    }
}

const REL_TOL: f64 = 1e-10;

/// Log-amplitude x(t) of the coherence e^{x}:
/// x = −(t²/2)∫_{−∞}^{∞} dω S(ω) F(ωt) W_ir(ω).
pub fn gaussian_decay(
    s: &SpectralDensity,
    t: f64,
    kind: SequenceKind,
    omega_ir: Option<f64>,
    cutoff: IrCutoff,
) -> Result<f64> {
    s.validate()?;
    if !(t > 0.0) {
        return Err(Error::InvalidInput("t must be > 0".into()));
    }
    if let Some(w) = omega_ir {
        if !(w > 0.0) {
            return Err(Error::InvalidInput("omega_ir must be > 0".into()));
        }
    }
    if matches!(s, SpectralDensity::OneOverF { .. }) && kind == SequenceKind::Ramsey && omega_ir.is_none() {
        return Err(Error::InvalidInput(
            "1/f Ramsey integral diverges without an infrared cutoff".into(),
        ));
    }
    let weight = |w: f64| match (omega_ir, cutoff) {
        (None, _) => 1.0,
        (Some(ir), IrCutoff::Window) => 1.0 - sinc(w / (2.0 * ir)).powi(2),
        (Some(ir), IrCutoff::Hard) => {
            if w >= ir {
                1.0
            } else {
                0.0
            }
        }
    };
    // Integrate over s = ln ω so decades are weighted evenly.
    let f = |lw: f64| {
        let w = lw.exp();
        s.eval(w) * filter(kind, w, t) * weight(w) * w
    };
    let mut lo = 1e-9 / t;
    if let Some(ir) = omega_ir {
        lo = lo.min(ir * 1e-9);
    }
    let hi = 1e9 / t;
    let mut pts: Vec<f64> = vec![lo.ln(), hi.ln()];
    // breakpoints: decades around the filter scale, the cutoff and any
    // spectral feature
    for k in -6..=6 {
        pts.push((10f64.powi(k) / t).ln());
    }
    if let Some(ir) = omega_ir {
        pts.push(ir.ln());
        if cutoff == IrCutoff::Hard {
            for p in pts.iter_mut() {
                if *p < ir.ln() {
                    *p = ir.ln();
                }
            }
        }
    }
    match s {
        SpectralDensity::Lorentzian { gamma1, .. } => pts.push(gamma1.ln()),
        SpectralDensity::Tabulated { omega, .. } => {
            pts.extend(omega.iter().filter(|&&w| w > lo && w < hi).map(|w| w.ln()))
        }
        _ => {}
    }
    pts.retain(|p| *p >= lo.ln() && *p <= hi.ln());
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let (v, _) = integrate_pieces(f, &pts, REL_TOL, 0.0);
    // Below `lo` the integrand is ≈ S(lo)·F(0)·W; its contribution relative
    // to the rest is O(1e-9) for every supported spectrum.
    Ok(-t * t * v)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsemblePrediction {
    /// x_R = −t·ramsey_rate
    pub ramsey_rate: f64,
    pub xi: f64,
    pub gamma_max: f64,
    pub ln_ratio: f64,
    /// Self-consistent echo time, x_E(T2E) = −1.
    pub t2_echo: f64,
    pub t2_ramsey: f64,
    /// ln(γmax/γmin)/ln(γmax·T2E)
    pub efficiency: f64,
}

impl EnsemblePrediction {
    pub fn ramsey(&self, t: f64) -> f64 {
        -t * self.ramsey_rate
    }

    /// x_E(t) = −tξ·ln(γmax·t); only valid for γmax·t > 1.
    pub fn echo(&self, t: f64) -> Result<f64> {
        if self.gamma_max * t <= 1.0 {
            return Err(Error::InvalidInput(format!(
                "echo form outside its validity range (gamma_max*t = {:.3} <= 1)",
                self.gamma_max * t
            )));
        }
        Ok(-t * self.xi * (self.gamma_max * t).ln())
    }

    pub fn log_amplitude(&self, kind: SequenceKind, t: f64) -> Result<f64> {
        match kind {
            SequenceKind::Ramsey => Ok(self.ramsey(t)),
            SequenceKind::Echo => self.echo(t),
        }
    }
}

/// ln(γmax/γmin)/ln(γmax·T2E) for a given echo time.
pub fn echo_efficiency(ln_ratio: f64, gamma_max: f64, t2_echo: f64) -> f64 {
    ln_ratio / (gamma_max * t2_echo).ln()
}

pub fn ensemble_decay_predict_params(xi: f64, gamma_min: f64, gamma_max: f64) -> Result<EnsemblePrediction> {
    if !(gamma_min > 0.0 && gamma_min <= gamma_max && xi >= 0.0) {
        return Err(Error::InvalidInput("invalid ensemble bounds".into()));
    }
    let ln_ratio = (gamma_max / gamma_min).ln();
    let ramsey_rate = xi * ln_ratio;
    // Solve t·ξ·ln(γmax t) = 1 on t > 1/γmax (monotone there).
    let t2_echo = if xi == 0.0 {
        f64::INFINITY
    } else {
        let g = |t: f64| t * xi * (gamma_max * t).ln() - 1.0;
        let mut lo = 1.0 / gamma_max;
        let mut hi = lo * 2.0;
        while g(hi) < 0.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    Ok(EnsemblePrediction {
        ramsey_rate,
        xi,
        gamma_max,
        ln_ratio,
        t2_echo,
        t2_ramsey: 1.0 / ramsey_rate,
        efficiency: if t2_echo.is_finite() {
            echo_efficiency(ln_ratio, gamma_max, t2_echo)
        } else {
            f64::NAN
        },
    })
}

pub fn ensemble_decay_predict(e: &FluctuatorEnsemble) -> Result<EnsemblePrediction> {
    ensemble_decay_predict_params(e.xi, e.gamma_min, e.gamma_max)
}
