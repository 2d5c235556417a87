//! Spectral densities, periodogram estimation and coloured-noise synthesis.
//!
//! Convention: S(ω) is two-sided and symmetric with ∫_{−∞}^{∞} S dω equal
//! to the variance of the process.

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::fitkit::{fit_lorentzian_psd, fit_power_law, FitResult};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SpectralDensity {
    White {
        s0: f64,
    },
    /// A/|ω|
    OneOverF {
        a: f64,
    },
    /// weight·2γ₁/(γ₁² + ω²)
    Lorentzian {
        gamma1: f64,
        weight: f64,
    },
    /// Non-negative angular frequencies (ascending) with values; linear
    /// interpolation inside, constant below, zero above.
    Tabulated {
        omega: Vec<f64>,
        s: Vec<f64>,
    },
}

pub fn psd_lorentzian(gamma1: f64, omega: f64) -> f64 {
    2.0 * gamma1 / (gamma1 * gamma1 + omega * omega)
}

impl SpectralDensity {
    pub fn eval(&self, omega: f64) -> f64 {
        let w = omega.abs();
        match self {
            SpectralDensity::White { s0 } => *s0,
            SpectralDensity::OneOverF { a } => a / w,
            SpectralDensity::Lorentzian { gamma1, weight } => weight * psd_lorentzian(*gamma1, w),
            SpectralDensity::Tabulated { omega, s } => {
                if omega.is_empty() || w > *omega.last().expect("non-empty") {
                    return 0.0;
                }
                if w <= omega[0] {
                    return s[0];
                }
                let i = omega.partition_point(|&x| x < w);
                let (x0, x1) = (omega[i - 1], omega[i]);
                let f = (w - x0) / (x1 - x0);
                s[i - 1] * (1.0 - f) + s[i] * f
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(format!("spectral density: {m}")));
        match self {
            SpectralDensity::White { s0 } if !(*s0 >= 0.0) => bad("s0 must be >= 0"),
            SpectralDensity::OneOverF { a } if !(*a >= 0.0) => bad("a must be >= 0"),
            SpectralDensity::Lorentzian { gamma1, weight } if !(*gamma1 > 0.0 && *weight >= 0.0) => {
                bad("gamma1 must be > 0 and weight >= 0")
            }
            SpectralDensity::Tabulated { omega, s } => {
                if omega.len() != s.len() || omega.is_empty() {
                    return bad("table columns differ in length or are empty");
                }
                if omega.windows(2).any(|w| w[1] <= w[0]) || omega[0] < 0.0 {
                    return bad("frequencies must be non-negative and increasing");
                }
                if s.iter().any(|v| !(*v >= 0.0)) {
                    return bad("values must be >= 0");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Positive-frequency table excluding DC, for fitting.
    pub fn table(&self) -> Option<(&[f64], &[f64])> {
        match self {
            SpectralDensity::Tabulated { omega, s } => {
                let k = usize::from(omega.first() == Some(&0.0));
                Some((&omega[k..], &s[k..]))
            }
            _ => None,
        }
    }

    /// ∫_{−∞}^{∞} S dω of a table (trapezoid over the positive half, doubled).
    pub fn tabulated_power(&self) -> Option<f64> {
        let (w, s) = match self {
            SpectralDensity::Tabulated { omega, s } => (omega, s),
            _ => return None,
        };
        let mut tot = 0.0;
        for i in 1..w.len() {
            tot += 0.5 * (s[i] + s[i - 1]) * (w[i] - w[i - 1]);
        }
        Some(2.0 * tot)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsdOptions {
    /// Segment length in samples; None uses the whole record.
    pub segment: Option<usize>,
    pub hann: bool,
}

impl Default for PsdOptions {
    fn default() -> Self {
        Self {
            segment: None,
            hann: false,
        }
    }
}

pub const MIN_PSD_SAMPLES: usize = 64;

/// Mean-subtracted, segment-averaged periodogram with 50% overlap.
pub fn psd_estimate(series: &[f64], dt: f64, opts: &PsdOptions) -> Result<SpectralDensity> {
    if series.len() < MIN_PSD_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "PSD needs at least {MIN_PSD_SAMPLES} samples, got {}",
            series.len()
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidInput("dt must be positive".into()));
    }
    let n = opts.segment.unwrap_or(series.len()).min(series.len());
    if n < MIN_PSD_SAMPLES {
        return Err(Error::InvalidInput("segment shorter than the minimum length".into()));
    }
    let step = (n / 2).max(1);
    let window: Vec<f64> = (0..n)
        .map(|i| {
            if opts.hann {
                let x = std::f64::consts::PI * i as f64 / n as f64;
                x.sin().powi(2)
            } else {
                1.0
            }
        })
        .collect();
    let wnorm: f64 = window.iter().map(|w| w * w).sum::<f64>() / n as f64;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let nf = n / 2 + 1;
    let mut acc = vec![0.0; nf];
    let mut count = 0usize;
    let mut start = 0;
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    while start + n <= series.len() {
        let seg = &series[start..start + n];
        let mean = seg.iter().sum::<f64>() / n as f64;
        for (b, (x, w)) in buf.iter_mut().zip(seg.iter().zip(&window)) {
            *b = Complex64::new((x - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        count += 1;
        start += step;
    }
    // S(ω_k) = dt |X_k|² / (2π N): two-sided density per unit angular
    // frequency, so Σ_k S Δω over all k equals the sample variance.
    let scale = dt / (2.0 * std::f64::consts::PI * n as f64 * wnorm * count as f64);
    let dw = 2.0 * std::f64::consts::PI / (n as f64 * dt);
    Ok(SpectralDensity::Tabulated {
        omega: (0..nf).map(|k| k as f64 * dw).collect(),
        s: acc.into_iter().map(|a| a * scale).collect(),
    })
}

/// Fits weight·2γ₁/(γ₁²+ω²) + floor to a tabulated PSD, below `omega_max`.
pub fn fit_psd_lorentzian(psd: &SpectralDensity, omega_max: Option<f64>) -> Result<FitResult> {
    let (w, s) = psd
        .table()
        .ok_or_else(|| Error::InvalidInput("expected a tabulated PSD".into()))?;
    let lim = omega_max.unwrap_or(f64::INFINITY);
    let (w, s): (Vec<f64>, Vec<f64>) = w.iter().zip(s).filter(|p| *p.0 <= lim).map(|(a, b)| (*a, *b)).unzip();
    fit_lorentzian_psd(&w, &s)
}

/// Fits S = a·ω^(−α) over [omega_min, omega_max] in log space.
pub fn fit_psd_power_law(psd: &SpectralDensity, omega_min: f64, omega_max: f64) -> Result<FitResult> {
    let (w, s) = psd
        .table()
        .ok_or_else(|| Error::InvalidInput("expected a tabulated PSD".into()))?;
    let (w, s): (Vec<f64>, Vec<f64>) = w
        .iter()
        .zip(s)
        .filter(|p| *p.0 >= omega_min && *p.0 <= omega_max)
        .map(|(a, b)| (*a, *b))
        .unzip();
    fit_power_law(&w, &s)
}

/// Gaussian noise with S(ω) = A/|ω|^α (two-sided), synthesised by shaping
/// white noise in the Fourier domain. The DC bin is zeroed.
pub fn synthesize_power_law<R: Rng>(a: f64, alpha: f64, n: usize, dt: f64, rng: &mut R) -> Vec<f64> {
    let fft = FftPlanner::<f64>::new().plan_fft_inverse(n);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let dw = 2.0 * std::f64::consts::PI / (n as f64 * dt);
    // E|X_k|² = 2π N S(ω_k) / dt
    for k in 1..=n / 2 {
        let w = k as f64 * dw;
        let var = 2.0 * std::f64::consts::PI * n as f64 * a / w.powf(alpha) / dt;
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        let z = if 2 * k == n {
            Complex64::new(re * var.sqrt(), 0.0)
        } else {
            Complex64::new(re, im) * (var / 2.0).sqrt()
        };
        buf[k] = z;
        if 2 * k != n {
            buf[n - k] = z.conj();
        }
    }
    fft.process(&mut buf);
    buf.iter().map(|z| z.re / n as f64).collect()
}
