//! Specialised fitters built on the simplex and linear solvers.

use std::f64::consts::TAU;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::models::{self, fit_model, FitResult, ModelFn, ModelKind, Residuals, SigmaMethod};
use super::nelder_mead::NmOptions;
use crate::{Error, Result};

fn check_xy(x: &[f64], y: &[f64], min: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < min {
        return Err(Error::FitFailure(format!(
            "need at least {min} samples, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite sample".into()));
    }
    Ok(())
}

/// Log-linear initial guess for a·e^(−t/τ) + c. Returns (a, τ).
fn exp_guess(t: &[f64], y: &[f64], offset: f64) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(y)
        .filter(|(_, &v)| v - offset > 0.0)
        .map(|(&t, &v)| (t, (v - offset).ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let lf = models::linear_fit(&xs, &ys).ok()?;
    let slope = lf.params[1];
    if slope >= 0.0 {
        return None;
    }
    Some((lf.params[0].exp(), -1.0 / slope))
}

/// Fit a·e^(−t/τ) (plus an offset when `with_offset`).
pub fn fit_exp_decay(t: &[f64], y: &[f64], with_offset: bool) -> Result<FitResult> {
    check_xy(t, y, 8)?;
    let span = t.iter().copied().fold(f64::MIN, f64::max) - t.iter().copied().fold(f64::MAX, f64::min);
    let c0 = if with_offset {
        let last = y[y.len() - 1];
        let min = y.iter().copied().fold(f64::MAX, f64::min);
        last.min(min) - 1e-3 * (y[0] - last).abs()
    } else {
        0.0
    };
    let (a0, tau0) = exp_guess(t, y, c0).ok_or_else(|| Error::FitFailure("data do not decay".into()))?;
    let mut model = ModelFn::new(ModelKind::ExpDecay);
    if !with_offset {
        model = model.fix("offset", 0.0);
    }
    let fit = fit_model(&model, t, y, &[a0, tau0, c0])?;
    let tau = fit.params[1];
    if !(tau > 0.0) || tau > 1e3 * span {
        return Err(Error::FitFailure(format!(
            "fitted decay constant {tau:e} is not a decay"
        )));
    }
    Ok(fit)
}

/// Fit a·e^(−(t/τ)²) (plus an offset when `with_offset`).
pub fn fit_gauss_decay(t: &[f64], y: &[f64], with_offset: bool) -> Result<FitResult> {
    check_xy(t, y, 8)?;
    let c0 = if with_offset { y[y.len() - 1] } else { 0.0 };
    let (a0, tau0) = exp_guess(t, y, c0 - 1e-6).ok_or_else(|| Error::FitFailure("data do not decay".into()))?;
    let mut model = ModelFn::new(ModelKind::GaussDecay);
    if !with_offset {
        model = model.fix("offset", 0.0);
    }
    let fit = fit_model(&model, t, y, &[a0, tau0, c0])?;
    if !(fit.params[1].abs() > 0.0) {
        return Err(Error::FitFailure("Gaussian decay constant collapsed".into()));
    }
    let mut fit = fit;
    fit.params[1] = fit.params[1].abs();
    Ok(fit)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecayShape {
    Exponential,
    Gaussian,
}

/// Compare exponential and Gaussian envelopes by residual.
pub fn select_decay_model(t: &[f64], y: &[f64], with_offset: bool) -> Result<(DecayShape, FitResult, FitResult)> {
    let e = fit_exp_decay(t, y, with_offset)?;
    let g = fit_gauss_decay(t, y, with_offset)?;
    let shape = if e.residual <= g.residual {
        DecayShape::Exponential
    } else {
        DecayShape::Gaussian
    };
    Ok((shape, e, g))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FringeFit {
    /// Hz.
    pub frequency: f64,
    pub frequency_sigma: f64,
    /// Envelope decay constant in s (infinite for an undamped fringe).
    pub decay: f64,
    pub phase: f64,
    pub amplitude: f64,
    pub amplitude_sigma: f64,
    pub offset: f64,
    /// False when the amplitude is consistent with zero, in which case the
    /// frequency carries no information.
    pub identifiable: bool,
    pub residual: f64,
    pub sigma_method: SigmaMethod,
}

struct Fringe<'a> {
    t: &'a [f64],
}

impl Residuals for Fringe<'_> {
    fn residuals(&self, p: &[f64], y: &[f64]) -> Vec<f64> {
        let (f, k, a, b, c) = (p[0], p[1], p[2], p[3], p[4]);
        self.t
            .iter()
            .zip(y)
            .map(|(&t, &y)| {
                let e = (-k * t).exp();
                let w = TAU * f * t;
                e * (a * w.cos() + b * w.sin()) + c - y
            })
            .collect()
    }
}

/// Inner linear solve for fixed (f, k): returns (a, b, c, rss).
fn project(t: &[f64], y: &[f64], f: f64, k: f64) -> (f64, f64, f64, f64) {
    let mut m = Matrix3::<f64>::zeros();
    let mut v = Vector3::<f64>::zeros();
    let rows: Vec<[f64; 3]> = t
        .iter()
        .map(|&t| {
            let e = (-k * t).exp();
            let w = TAU * f * t;
            [e * w.cos(), e * w.sin(), 1.0]
        })
        .collect();
    for (r, &yv) in rows.iter().zip(y) {
        for i in 0..3 {
            v[i] += r[i] * yv;
            for j in 0..3 {
                m[(i, j)] += r[i] * r[j];
            }
        }
    }
    let sol = m.lu().solve(&v).unwrap_or_else(Vector3::zeros);
    let rss = rows
        .iter()
        .zip(y)
        .map(|(r, &yv)| (r[0] * sol[0] + r[1] * sol[1] + sol[2] - yv).powi(2))
        .sum();
    (sol[0], sol[1], sol[2], rss)
}

/// Damped-sinusoid fit A·e^(−t/τ)·cos(2πft + φ) + c.
pub fn fit_fringes(t: &[f64], y: &[f64]) -> Result<FringeFit> {
    check_xy(t, y, 8)?;
    if t.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("sample times must increase".into()));
    }
    let n = t.len();
    let t0 = t[0];
    let ts: Vec<f64> = t.iter().map(|v| v - t0).collect();
    let span = ts[n - 1];
    let mean = y.iter().sum::<f64>() / n as f64;
    let dev = y.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    let mut dts: Vec<f64> = ts.windows(2).map(|w| w[1] - w[0]).collect();
    dts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let nyquist = 0.5 / dts[dts.len() / 2];

    let flat = || FringeFit {
        frequency: f64::NAN,
        frequency_sigma: f64::INFINITY,
        decay: f64::INFINITY,
        phase: 0.0,
        amplitude: 0.0,
        amplitude_sigma: 0.0,
        offset: mean,
        identifiable: false,
        residual: y.iter().map(|v| (v - mean).powi(2)).sum(),
        sigma_method: SigmaMethod::None,
    };
    if dev <= 1e-12 * (1.0 + mean.abs()) {
        return Ok(flat());
    }

    // Periodogram peak on an 8× oversampled grid.
    let df = 1.0 / (8.0 * span);
    let nf = (nyquist / df).floor() as usize;
    let mut best = (0.0, 0.0);
    for j in 1..=nf {
        let f = j as f64 * df;
        let (mut re, mut im) = (0.0, 0.0);
        for (&tt, &yy) in ts.iter().zip(y) {
            let w = TAU * f * tt;
            re += (yy - mean) * w.cos();
            im += (yy - mean) * w.sin();
        }
        let p = re * re + im * im;
        if p > best.1 {
            best = (f, p);
        }
    }
    let f_hat = best.0;
    if f_hat == 0.0 {
        return Ok(flat());
    }

    let mut start = (f_hat, 0.0, f64::INFINITY);
    for m in [0.0, 0.3, 1.0, 3.0, 10.0] {
        let k = m / span;
        let r = project(&ts, y, f_hat, k).3;
        if r < start.2 {
            start = (f_hat, k, r);
        }
    }
    let (fs, ks) = (f_hat, 1.0 / span);
    let obj = |u: &[f64]| project(&ts, y, u[0] * fs, u[1] * ks).3;
    let opts = NmOptions {
        initial_step: Some(vec![0.25 * df / fs, 0.2]),
        xtol: 1e-13,
        ..Default::default()
    };
    let nm = super::nelder_mead::nelder_mead(obj, &[start.0 / fs, start.1 / ks], &opts)?;
    // The model is even in f; the simplex may land on the mirror image.
    let f = (nm.x[0] * fs).abs();
    let k = nm.x[1] * ks;
    let (a, b, c, rss) = project(&ts, y, f, k);

    let model = Fringe { t: &ts };
    let p = [f, k, a, b, c];
    let scale = [fs, ks, a.abs().max(dev), b.abs().max(dev), c.abs().max(dev)];
    let j = models::jacobian(&model, &p, y, &scale);
    let cov = models::jacobian_covariance(&j, rss, n);
    let amplitude = (a * a + b * b).sqrt();
    let phase = (-b).atan2(a) - TAU * f * t0;
    let (sig_f, sig_a, method) = match &cov {
        Some(c) => {
            let ga = [0.0, 0.0, a / amplitude, b / amplitude, 0.0];
            let va: f64 = (0..5)
                .map(|i| (0..5).map(|l| ga[i] * c[(i, l)] * ga[l]).sum::<f64>())
                .sum();
            (c[(0, 0)].sqrt(), va.max(0.0).sqrt(), SigmaMethod::Jacobian)
        }
        None => {
            let s = models::bootstrap_sigma(&model, y, &p, &scale, 100);
            (s[0], (s[2] * s[2] + s[3] * s[3]).sqrt(), SigmaMethod::Bootstrap)
        }
    };
    let identifiable = amplitude > 3.0 * sig_a && amplitude > 1e-9 * (1.0 + c.abs());
    if identifiable {
        if f * span < 3.0 {
            return Err(Error::FitFailure(format!(
                "undersampled: only {:.2} periods in the window",
                f * span
            )));
        }
        if f >= nyquist {
            return Err(Error::FitFailure(format!(
                "undersampled: frequency {f:e} Hz at or above Nyquist {nyquist:e} Hz"
            )));
        }
    }
    Ok(FringeFit {
        frequency: f,
        frequency_sigma: sig_f,
        decay: if k > 0.0 { 1.0 / k } else { f64::INFINITY },
        phase: phase.rem_euclid(TAU),
        amplitude,
        amplitude_sigma: sig_a,
        offset: c,
        identifiable,
        residual: rss,
        sigma_method: method,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CrossingFit {
    /// Coupling in the units of the frequency data.
    pub g: f64,
    pub g_sigma: f64,
    /// Tuning slope in frequency units per control unit.
    pub slope: f64,
    pub slope_sigma: f64,
    /// Control value at the crossing.
    pub x0: f64,
    pub x0_sigma: f64,
    /// Frequency of the fixed mode.
    pub center: f64,
    pub residual: f64,
    pub sigma_method: SigmaMethod,
}

/// Upper and lower branch at control `x` for params [center, g, slope, x0].
pub fn crossing_branches(p: &[f64], x: f64) -> (f64, f64) {
    let wt = p[0] + p[2] * (x - p[3]);
    let mid = 0.5 * (p[0] + wt);
    let half = ((0.5 * (wt - p[0])).powi(2) + p[1] * p[1]).sqrt();
    (mid + half, mid - half)
}

struct Crossing<'a> {
    x: &'a [f64],
}

impl Residuals for Crossing<'_> {
    fn residuals(&self, p: &[f64], y: &[f64]) -> Vec<f64> {
        self.x
            .iter()
            .zip(y)
            .map(|(&x, &y)| {
                let (u, l) = crossing_branches(p, x);
                if (y - u).abs() < (y - l).abs() {
                    y - u
                } else {
                    y - l
                }
            })
            .collect()
    }
}

/// Fit the two branches of an avoided crossing between a fixed mode and a
/// linearly tuned one. Points need not be labelled by branch.
pub fn fit_avoided_crossing(x: &[f64], y: &[f64]) -> Result<CrossingFit> {
    check_xy(x, y, 6)?;
    let ymin = y.iter().copied().fold(f64::MAX, f64::min);
    let ymax = y.iter().copied().fold(f64::MIN, f64::max);
    let range = (ymax - ymin).max(1e-300);
    // The untuned mode shows up as the most populated frequency bin.
    let nb = 40usize;
    let bw = range / nb as f64;
    let mut counts = vec![0usize; nb + 1];
    for &v in y {
        counts[((v - ymin) / bw).floor().min(nb as f64) as usize] += 1;
    }
    let mb = (0..=nb).max_by_key(|&i| (counts[i], std::cmp::Reverse(i))).unwrap();
    let near: Vec<f64> = y
        .iter()
        .copied()
        .filter(|v| ((v - ymin) / bw).floor().min(nb as f64) as usize == mb)
        .collect();
    let c0 = near.iter().sum::<f64>() / near.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(_, &v)| (v - c0).abs() > 3.0 * bw)
        .map(|(&a, &b)| (a, b))
        .unzip();
    if lx.len() < 2 {
        return Err(Error::FitFailure(
            "unidentifiable g: no tuned branch in the data".into(),
        ));
    }
    let line = models::linear_fit(&lx, &ly)?;
    let s0 = line.params[1];
    if s0 == 0.0 {
        return Err(Error::FitFailure(
            "unidentifiable g: tuned branch has zero slope".into(),
        ));
    }
    let x00 = (c0 - line.params[0]) / s0;
    let model = Crossing { x };
    let xspan = x.iter().copied().fold(f64::MIN, f64::max) - x.iter().copied().fold(f64::MAX, f64::min);
    let mut best: Option<(Vec<f64>, f64, usize)> = None;
    for gm in [0.02, 0.1, 0.3] {
        let p0 = [c0, gm * range, s0, x00];
        let scale = [c0.abs().max(range), range, s0.abs(), xspan.max(x00.abs())];
        let opts = NmOptions {
            xtol: 1e-12,
            ..Default::default()
        };
        if let Ok((p, f, ne, _)) = models::minimise_scaled(&model, y, &p0, &scale, &opts) {
            if best.as_ref().map_or(true, |b| f < b.1) {
                best = Some((p, f, ne));
            }
        }
    }
    let (mut p, _, n_eval) = best.ok_or_else(|| Error::FitFailure("crossing fit did not converge".into()))?;
    p[1] = p[1].abs();

    let (mut upper, mut lower) = (0, 0);
    let (mut left, mut right) = (0, 0);
    for (&xv, &yv) in x.iter().zip(y) {
        let (u, l) = crossing_branches(&p, xv);
        if (yv - u).abs() < (yv - l).abs() {
            upper += 1;
        } else {
            lower += 1;
        }
        if xv < p[3] {
            left += 1;
        } else {
            right += 1;
        }
    }
    if upper < 2 || lower < 2 || left == 0 || right == 0 {
        return Err(Error::FitFailure(format!(
            "unidentifiable g: data cover a single branch or one side (upper {upper}, lower {lower}, left {left}, right {right})"
        )));
    }
    let scale = [p[0].abs().max(range), range, p[2].abs(), xspan.max(p[3].abs())];
    let fit = models::finish(&model, vec![], y, p.clone(), &scale, n_eval, true);

    Ok(CrossingFit {
        g: p[1],
        g_sigma: fit.sigma[1],
        slope: p[2],
        slope_sigma: fit.sigma[2],
        x0: p[3],
        x0_sigma: fit.sigma[3],
        center: p[0],
        residual: fit.residual,
        sigma_method: fit.sigma_method,
    })
}

/// Log-space fit of S(ω) = w·2γ/(γ² + ω²) + floor to positive-frequency data.
pub fn fit_lorentzian_psd(omega: &[f64], s: &[f64]) -> Result<FitResult> {
    check_xy(omega, s, 8)?;
    let pts: Vec<(f64, f64)> = omega
        .iter()
        .zip(s)
        .filter(|(&w, &v)| w > 0.0 && v > 0.0)
        .map(|(&w, &v)| (w, v))
        .collect();
    if pts.len() < 8 {
        return Err(Error::FitFailure("too few positive PSD points".into()));
    }
    let plateau = pts[..4].iter().map(|p| p.1).sum::<f64>() / 4.0;
    let knee = pts
        .iter()
        .find(|p| p.1 < 0.5 * plateau)
        .map(|p| p.0)
        .unwrap_or(pts[pts.len() / 2].0);
    let tail = pts[pts.len() - 4..].iter().map(|p| p.1).sum::<f64>() / 4.0;
    let obj = |u: &[f64]| {
        let (w, g, fl) = (u[0].exp(), u[1].exp(), u[2].exp());
        pts.iter()
            .map(|&(om, v)| (v.ln() - (w * 2.0 * g / (g * g + om * om) + fl).ln()).powi(2))
            .sum::<f64>()
    };
    let u0 = [(plateau * knee / 2.0).ln(), knee.ln(), (0.1 * tail).ln()];
    let opts = NmOptions {
        initial_step: Some(vec![0.5, 0.5, 0.5]),
        xtol: 1e-10,
        ..Default::default()
    };
    let r = super::nelder_mead::nelder_mead(obj, &u0, &opts)?;
    Ok(FitResult {
        names: vec!["weight".into(), "gamma1".into(), "floor".into()],
        params: r.x.iter().map(|v| v.exp()).collect(),
        sigma: vec![0.0; 3],
        residual: r.fx,
        converged: r.converged,
        n_eval: r.n_eval,
        sigma_method: SigmaMethod::None,
    })
}

/// Straight-line fit of ln S against ln ω: returns params [ln A, α] for S = A/ω^α.
pub fn fit_power_law(omega: &[f64], s: &[f64]) -> Result<FitResult> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = omega
        .iter()
        .zip(s)
        .filter(|(&w, &v)| w > 0.0 && v > 0.0)
        .map(|(&w, &v)| (w.ln(), v.ln()))
        .unzip();
    let mut f = models::linear_fit(&lx, &ly)?;
    f.params[1] = -f.params[1];
    f.names = vec!["ln_a".into(), "alpha".into()];
    Ok(f)
}

/// Convenience wrapper used by scripts and the CLI `fit` command.
pub fn fit_by_kind(kind: ModelKind, x: &[f64], y: &[f64]) -> Result<FitResult> {
    match kind {
        ModelKind::ExpDecay => fit_exp_decay(x, y, true),
        ModelKind::GaussDecay => fit_gauss_decay(x, y, true),
        ModelKind::Linear => models::linear_fit(x, y),
        ModelKind::DampedSinusoid => {
            let f = fit_fringes(x, y)?;
            Ok(FitResult {
                names: ModelKind::DampedSinusoid
                    .names()
                    .iter()
                    .map(|s| s.to_string())
                    .collect(),
                params: vec![f.amplitude, f.decay, f.frequency, f.phase, f.offset],
                sigma: vec![f.amplitude_sigma, 0.0, f.frequency_sigma, 0.0, 0.0],
                residual: f.residual,
                converged: true,
                n_eval: 0,
                sigma_method: f.sigma_method,
            })
        }
        ModelKind::LorentzianPlusPowerlaw => {
            let l = fit_lorentzian_psd(x, y)?;
            let p = fit_power_law(x, y)?;
            Ok(FitResult {
                names: ModelKind::LorentzianPlusPowerlaw
                    .names()
                    .iter()
                    .map(|s| s.to_string())
                    .collect(),
                params: vec![l.params[0], l.params[1], p.params[0].exp(), p.params[1]],
                sigma: vec![0.0, 0.0, 0.0, p.sigma[1]],
                residual: l.residual,
                converged: l.converged,
                n_eval: l.n_eval,
                sigma_method: SigmaMethod::None,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    fn grid(n: usize, end: f64) -> Vec<f64> {
        (0..n).map(|i| end * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn exponential_noiseless() {
        let t = grid(40, 0.1);
        let y: Vec<f64> = t.iter().map(|t| 0.8 * (-t / 25e-3).exp()).collect();
        let f = fit_exp_decay(&t, &y, false).unwrap();
        assert!((f.get("tau").unwrap() / 25e-3 - 1.0).abs() < 1e-6);
        let y2: Vec<f64> = y.iter().map(|v| v + 0.1).collect();
        let f2 = fit_exp_decay(&t, &y2, true).unwrap();
        assert!((f2.get("tau").unwrap() / 25e-3 - 1.0).abs() < 1e-5);
        assert!((f2.get("offset").unwrap() - 0.1).abs() < 1e-6);
    }

    #[test]
    fn non_decaying_rejected() {
        let t = grid(20, 1.0);
        let y: Vec<f64> = t.iter().map(|t| 1.0 + 0.5 * t).collect();
        assert!(matches!(fit_exp_decay(&t, &y, false), Err(Error::FitFailure(_))));
        assert!(fit_exp_decay(&t[..5], &y[..5], false).is_err());
    }

    #[test]
    fn fringe_exact_recovery() {
        let f0 = 20.371e6;
        let t: Vec<f64> = (0..400).map(|i| i as f64 * 2e-9).collect();
        let y: Vec<f64> = t
            .iter()
            .map(|&t| 0.4 * (-t / 0.6e-6).exp() * (TAU * f0 * t + 0.3).cos() + 0.5)
            .collect();
        let fit = fit_fringes(&t, &y).unwrap();
        assert!((fit.frequency / f0 - 1.0).abs() < 1e-6, "{}", fit.frequency);
        assert!((fit.decay / 0.6e-6 - 1.0).abs() < 1e-5);
        assert!((fit.amplitude - 0.4).abs() < 1e-6);
        assert!((fit.phase - 0.3).abs() < 1e-5);
        assert!(fit.identifiable);
    }

    #[test]
    fn fringe_zero_amplitude() {
        let t: Vec<f64> = (0..100).map(|i| i as f64 * 1e-8).collect();
        let y = vec![0.25; 100];
        let fit = fit_fringes(&t, &y).unwrap();
        assert!(!fit.identifiable);
        assert_eq!(fit.amplitude, 0.0);
    }

    #[test]
    fn fringe_too_few_periods() {
        let t: Vec<f64> = (0..100).map(|i| i as f64 * 1e-8).collect();
        let y: Vec<f64> = t.iter().map(|&t| (TAU * 1.5e6 * t).cos()).collect();
        assert!(matches!(fit_fringes(&t, &y), Err(Error::FitFailure(_))));
    }

    #[test]
    fn crossing_recovery_and_label_invariance() {
        let g = TAU * 0.5e6;
        let slope = TAU * 0.3e9;
        let wm = TAU * 4.9e9;
        let x0 = 37.0;
        let p = [wm, g, slope, x0];
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..41 {
            let v = x0 - 0.02 + 0.001 * i as f64;
            let (u, l) = crossing_branches(&p, v);
            xs.push(v);
            ys.push(u);
            xs.push(v);
            ys.push(l);
        }
        let fit = fit_avoided_crossing(&xs, &ys).unwrap();
        assert!((fit.g / g - 1.0).abs() < 1e-6, "{}", fit.g / g);
        assert!((fit.slope / slope - 1.0).abs() < 1e-6);
        assert!((fit.x0 - x0).abs() < 1e-8);
        // Reordering the points (swapping branch labels) changes nothing.
        let mut xr = Vec::new();
        let mut yr = Vec::new();
        for k in 0..41 {
            xr.push(xs[2 * k + 1]);
            yr.push(ys[2 * k + 1]);
            xr.push(xs[2 * k]);
            yr.push(ys[2 * k]);
        }
        let fit2 = fit_avoided_crossing(&xr, &yr).unwrap();
        assert!((fit2.g - fit.g).abs() / fit.g < 1e-8);
    }

    #[test]
    fn crossing_minimum_gap_is_2g() {
        let p = [10.0, 0.7, 3.0, 1.0];
        let (u, l) = crossing_branches(&p, 1.0);
        assert!((u - l - 1.4).abs() < 1e-14);
    }

    #[test]
    fn crossing_single_branch_rejected() {
        let p = [100.0, 1.0, 30.0, 0.0];
        let xs: Vec<f64> = (0..41).map(|i| -1.0 + 0.05 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| crossing_branches(&p, x).1).collect();
        assert!(matches!(fit_avoided_crossing(&xs, &ys), Err(Error::FitFailure(_))));
    }

    #[test]
    fn crossing_zero_coupling_consistent_with_zero() {
        let p = [100.0, 0.0, 30.0, 0.0];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let noise = Normal::new(0.0, 0.05).unwrap();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..41 {
            let x = -1.0 + 0.05 * i as f64;
            let (u, l) = crossing_branches(&p, x);
            xs.extend([x, x]);
            ys.extend([u + noise.sample(&mut rng), l + noise.sample(&mut rng)]);
        }
        let fit = fit_avoided_crossing(&xs, &ys).unwrap();
        assert!(fit.g <= 2.0 * fit.g_sigma + 0.05, "g {} sigma {}", fit.g, fit.g_sigma);
    }

    #[test]
    fn exp_preferred_over_gauss_at_snr10() {
        let t = grid(30, 3.0);
        let noise = Normal::new(0.0, 0.1).unwrap();
        let mut wins = 0;
        for s in 0..100 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(s);
            let y: Vec<f64> = t.iter().map(|t| (-t).exp() + noise.sample(&mut rng)).collect();
            if let Ok((DecayShape::Exponential, _, _)) = select_decay_model(&t, &y, false) {
                wins += 1;
            }
        }
        assert!(wins >= 95, "{wins}");
    }

    #[test]
    fn power_law_slope() {
        let w: Vec<f64> = (1..100).map(|i| i as f64).collect();
        let s: Vec<f64> = w.iter().map(|w| 3.0 / w.powf(1.2)).collect();
        let f = fit_power_law(&w, &s).unwrap();
        assert!((f.get("alpha").unwrap() - 1.2).abs() < 1e-12);
    }

    #[test]
    fn lorentzian_knee() {
        let w: Vec<f64> = (1..400).map(|i| 1e-3 * 1.03f64.powi(i)).collect();
        let s: Vec<f64> = w.iter().map(|w| 0.7 * 2.0 * 0.5 / (0.25 + w * w) + 1e-6).collect();
        let f = fit_lorentzian_psd(&w, &s).unwrap();
        assert!((f.params[1] / 0.5 - 1.0).abs() < 1e-4, "{:?}", f.params);
        assert!((f.params[0] / 0.7 - 1.0).abs() < 1e-4);
    }
}
